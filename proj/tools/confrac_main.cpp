#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "confrac/cli.hpp"

namespace {

struct SubcommandInfo {
    const char* kind;
    const char* help;
};

constexpr SubcommandInfo kSubcommands[] = {
    {"deriv", "evaluate a conformable fractional derivative"},
    {"integrate", "evaluate a conformable fractional integral"},
    {"extremal", "solve a fixed-endpoint fractional variational problem"},
    {"dubois", "check the DuBois-Reymond condition and energy drift along an extremal"},
    {"noether-check", "verify invariance and the Noether balance for a transformation family"},
    {"control", "solve a fractional optimal control problem via its Hamiltonian system"},
    {"dissipative-demo", "simulate the frictional action principle and its zero-width limit"},
    {"green-check", "verify the conformable Green identity on a rectangle"},
    {"el2d-check", "evaluate the two-dimensional Euler-Lagrange residual field"},
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw confrac::ParseError("cannot open problem file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conformable fractional calculus and variational toolkit"};
    app.require_subcommand(1);

    std::string spec_path, out_path, format = "json";
    double tol = 0.0;
    std::uint64_t seed = 12345;

    for (const auto& info : kSubcommands) {
        CLI::App* sub = app.add_subcommand(info.kind, info.help);
        sub->add_option("--spec", spec_path, "problem file (JSON); runs a built-in default when omitted");
        sub->add_option("--out", out_path, "write the result document here instead of stdout");
        sub->add_option("--format", format, "output format")
            ->check(CLI::IsMember({"json", "csv"}))
            ->capture_default_str();
        sub->add_option("--tol", tol, "tolerance override for the underlying solver or quadrature");
        sub->add_option("--seed", seed, "seed for spec-validation probe points")->capture_default_str();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string kind = app.get_subcommands().front()->get_name();
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const std::string text =
            spec_path.empty() ? confrac::cli::default_spec_text(kind) : read_file(spec_path);
        const confrac::cli::ProblemSpec spec = confrac::cli::parse_spec(text, kind, seed);
        const confrac::cli::ResultDocument doc = confrac::cli::run_spec(spec, tol);
        const std::string rendered = confrac::cli::render(doc, format);
        if (out_path.empty()) {
            std::cout << rendered;
        } else {
            std::ofstream out(out_path, std::ios::binary);
            if (!out) throw confrac::ParseError("cannot open output path '" + out_path + "'");
            out << rendered;
        }
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        std::fprintf(stderr, "wall-time: %.3f s\n", dt.count());
        return 0;
    } catch (const confrac::Error& e) {
        std::cerr << "confrac " << kind << ": " << e.what() << "\n";
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::cerr << "confrac " << kind << ": unexpected failure: " << e.what() << "\n";
        return 3;
    }
}
