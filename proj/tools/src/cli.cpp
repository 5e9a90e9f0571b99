// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#include "fixcert/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "fixcert/errors.hpp"
#include "fixcert/householder.hpp"
#include "fixcert/model_io.hpp"
#include "fixcert/verifier.hpp"
#include "json.hpp"

namespace fixcert::cli {

namespace {

using Json = nlohmann::ordered_json;

struct EngineFlags {
    double alpha_pr = 0.1;
    int r = 3;
    int r_prime = 50;
    int n_max = 500;
    std::string expansion = "const";
    double w_mul = 1e-3;
    double w_add = 1e-2;

    void add(CLI::App* app) {
        app->add_option("--alpha-pr", alpha_pr, "Peaceman-Rachford step size")->capture_default_str();
        app->add_option("--r", r, "Steps between consolidations")->capture_default_str();
        app->add_option("--r-prime", r_prime, "Stall window unit for phase 2")->capture_default_str();
        app->add_option("--n-max", n_max, "Total step budget")->capture_default_str();
        app->add_option("--expansion", expansion, "Expansion schedule")
            ->check(CLI::IsMember({"const", "exp"}))
            ->capture_default_str();
        app->add_option("--w-mul", w_mul, "Multiplicative expansion")->capture_default_str();
        app->add_option("--w-add", w_add, "Additive expansion")->capture_default_str();
    }

    EngineConfig engine() const {
        EngineConfig cfg;
        cfg.r = r;
        cfg.r_prime = r_prime;
        cfg.n_max = n_max;
        cfg.w_mul = w_mul;
        cfg.w_add = w_add;
        cfg.schedule = expansion == "exp" ? ExpansionSchedule::Exp : ExpansionSchedule::Const;
        cfg.validate();
        return cfg;
    }
};

struct TaskFlags {
    std::string model;
    std::string input;
    double eps = 0.0;
    int target = 0;
    std::string g2 = "fb-linesearch";
    std::string lambda_opt = "off";
    std::string out;
    std::string trace;
    std::uint64_t seed = 0;
    bool timing = false;
    EngineFlags engine;

    void add(CLI::App* app, bool with_input) {
        app->add_option("--model", model, "Model JSON file")->required();
        if (with_input) {
            app->add_option("--input", input, "Comma-separated input vector")->required();
            app->add_option("--eps", eps, "L-infinity radius")->capture_default_str();
            app->add_option("--target", target, "Target class")->capture_default_str();
        }
        app->add_option("--g2", g2, "Phase-2 solver: fb-linesearch, pr or fb:<alpha>")
            ->capture_default_str();
        app->add_option("--lambda-opt", lambda_opt, "Slope optimization budget")
            ->check(CLI::IsMember({"off", "reduced", "full"}))
            ->capture_default_str();
        app->add_option("--out", out, "Write the JSON report here instead of stdout");
        app->add_option("--trace", trace, "Write the per-step trace CSV here");
        app->add_option("--seed", seed, "Seed for randomized steps")->capture_default_str();
        app->add_flag("--timing", timing, "Include wall-clock time in the report");
        engine.add(app);
    }

    VerificationTask task() const {
        VerificationTask t;
        t.model = load_model(model);
        if (!input.empty()) t.x = parse_vector(input);
        t.epsilon = eps;
        t.target = target;
        t.g1 = SolverConfig{SolverMethod::PR, engine.alpha_pr};
        t.engine = engine.engine();
        if (g2 == "fb-linesearch") {
            t.g2.policy = G2Policy::FbLineSearch;
        } else if (g2 == "pr") {
            t.g2.policy = G2Policy::Pr;
        } else if (g2.rfind("fb:", 0) == 0) {
            t.g2.policy = G2Policy::FbFixed;
            std::size_t used = 0;
            const std::string num = g2.substr(3);
            t.g2.alpha = std::stod(num, &used);
            if (used != num.size()) throw std::invalid_argument("bad --g2 value: " + g2);
        } else {
            throw std::invalid_argument("bad --g2 value: " + g2);
        }
        t.lambda_opt = lambda_opt == "full"      ? LambdaOpt::Full
                       : lambda_opt == "reduced" ? LambdaOpt::Reduced
                                                 : LambdaOpt::Off;
        return t;
    }
};

Json number(double v) {
    if (std::isfinite(v)) return Json(v);
    return Json(nullptr);
}

Json verdict_json(const Verdict& v, bool timing) {
    Json j;
    j["status"] = status_name(v.status);
    j["margin"] = number(v.margin);
    j["phase1_steps"] = v.phase1_steps;
    j["phase2_steps"] = v.phase2_steps;
    if (timing) j["wallclock"] = v.wallclock;
    return j;
}

int status_code(Status s) {
    switch (s) {
    case Status::Certified:
    case Status::Contained: return kSuccess;
    case Status::Unknown: return kUnknown;
    case Status::Diverged:
    case Status::Exhausted: return kNoFixpoint;
    }
    return kUnknown;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

void emit(const Json& report, const std::string& out_path, std::ostream& out) {
    const std::string text = report.dump(2) + "\n";
    if (out_path.empty()) {
        out << text;
    } else {
        write_text(out_path, text);
    }
}

int verify_local_cmd(const TaskFlags& f, std::ostream& out) {
    const VerificationTask t = f.task();
    const Verdict v = verify_local(t);
    Json report = verdict_json(v, f.timing);
    report["target"] = t.target;
    report["epsilon"] = t.epsilon;
    emit(report, f.out, out);
    if (!f.trace.empty()) write_text(f.trace, trace_csv(v.trace));
    return status_code(v.status);
}

int baseline_cmd(const TaskFlags& f, const std::string& kind, int unroll_k, double kleene_alpha,
                 std::ostream& out) {
    VerificationTask t = f.task();
    t.kleene = SolverConfig{SolverMethod::FB, kleene_alpha};
    Verdict v;
    if (kind == "box") {
        v = verify_box(t);
    } else {
        v = verify_kleene(t, kind == "kleene-box" ? KleeneDomain::Box : KleeneDomain::Zonotope,
                          unroll_k);
    }
    Json report = verdict_json(v, f.timing);
    report["baseline"] = kind;
    emit(report, f.out, out);
    if (!f.trace.empty()) write_text(f.trace, trace_csv(v.trace));
    return status_code(v.status);
}

int verify_global_cmd(const TaskFlags& f, const std::string& lo, const std::string& hi,
                      int max_depth, int jobs, const std::string& csv, std::ostream& out) {
    const VerificationTask base = f.task();
    const RegionReport rep = verify_global(base, parse_vector(lo), parse_vector(hi), max_depth, jobs);
    Json report;
    report["certified_fraction"] = rep.certified_fraction;
    Json leaves = Json::array();
    for (const auto& leaf : rep.leaves) {
        Json l;
        l["depth"] = leaf.depth;
        l["label"] = leaf.label;
        l["status"] = status_name(leaf.status);
        l["margin"] = number(leaf.margin);
        l["lo"] = std::vector<double>(leaf.lo.data(), leaf.lo.data() + leaf.lo.size());
        l["hi"] = std::vector<double>(leaf.hi.data(), leaf.hi.data() + leaf.hi.size());
        leaves.push_back(std::move(l));
    }
    report["leaves"] = std::move(leaves);
    emit(report, f.out, out);
    if (!csv.empty()) write_text(csv, rep.to_csv());
    return rep.certified_fraction >= 1.0 ? kSuccess : kUnknown;
}

int householder_cmd(const RootTask& task, const std::string& method, int unroll_k,
                    const std::string& out_path, const std::string& trace, std::ostream& out) {
    RootResult res;
    int code = kSuccess;
    if (method == "kleene") {
        res = kleene_root(task, unroll_k);
        if (res.status != Status::Contained) code = kNoFixpoint;
    } else {
        try {
            res = analyze_root(task);
        } catch (const NonConvergence&) {
            res.status = Status::Diverged;
            code = kNoFixpoint;
        }
    }
    Json report;
    report["method"] = method;
    report["mode"] = task.mode == RootMode::Reach ? "reach" : "fix";
    report["status"] = status_name(res.status);
    if (code == kSuccess) {
        report["root_lo"] = res.root_lo;
        report["root_hi"] = res.root_hi;
        report["s_lo"] = res.s_lo;
        report["s_hi"] = res.s_hi;
    }
    report["iterations"] = res.iterations;
    emit(report, out_path, out);
    if (code == kSuccess && out_path.empty()) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "interval [%.3f, %.3f]\n", res.root_lo, res.root_hi);
        out << buf;
    }
    if (!trace.empty()) {
        std::ostringstream os;
        os.precision(17);
        os << "step,lo,hi\n";
        for (std::size_t i = 0; i < res.hulls.size(); ++i) {
            os << i + 1 << ',' << res.hulls[i].first << ',' << res.hulls[i].second << '\n';
        }
        write_text(trace, os.str());
    }
    return code;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Abstract fixpoint certification for monotone equilibrium networks", "fixcert"};
    app.require_subcommand(1);

    TaskFlags local;
    auto* c_local = app.add_subcommand("verify-local", "Certify an L-infinity ball around one input");
    local.add(c_local, true);

    TaskFlags global;
    std::string g_lo, g_hi, g_csv;
    int g_depth = 4;
    int g_jobs = 1;
    auto* c_global = app.add_subcommand("verify-global", "Certify an input box by bisection");
    global.add(c_global, false);
    c_global->add_option("--lo", g_lo, "Lower corner")->required();
    c_global->add_option("--hi", g_hi, "Upper corner")->required();
    c_global->add_option("--max-depth", g_depth, "Bisection depth")->capture_default_str();
    c_global->add_option("--jobs", g_jobs, "Worker threads")->capture_default_str();
    c_global->add_option("--csv", g_csv, "Write per-leaf CSV here");

    TaskFlags base;
    std::string b_kind = "kleene-zonotope";
    int b_unroll = 2;
    double b_alpha = 0.1;
    auto* c_base = app.add_subcommand("baseline", "Kleene or Box baseline on one input");
    base.add(c_base, true);
    c_base->add_option("--kind", b_kind, "Baseline")
        ->check(CLI::IsMember({"kleene-zonotope", "kleene-box", "box"}))
        ->capture_default_str();
    c_base->add_option("--unroll-k", b_unroll, "Join-free steps before joining")->capture_default_str();
    c_base->add_option("--alpha-fb", b_alpha, "Forward-backward step size for Kleene")->capture_default_str();

    RootTask root;
    std::string h_mode = "fix";
    std::string h_method = "contract";
    std::string h_out, h_trace;
    int h_unroll = 100;
    auto* c_hh = app.add_subcommand("householder", "Enclose the reciprocal square root over an interval");
    c_hh->add_option("--lo", root.lo, "Input lower bound")->capture_default_str();
    c_hh->add_option("--hi", root.hi, "Input upper bound")->capture_default_str();
    c_hh->add_option("--s0", root.s0, "Initial iterate")->capture_default_str();
    c_hh->add_option("--tol", root.epsilon, "Termination threshold")->capture_default_str();
    c_hh->add_option("--mode", h_mode, "fix or reach")->check(CLI::IsMember({"fix", "reach"}))->capture_default_str();
    c_hh->add_option("--method", h_method, "contract or kleene")
        ->check(CLI::IsMember({"contract", "kleene"}))
        ->capture_default_str();
    c_hh->add_option("--unroll-k", h_unroll, "Kleene unrolling cap")->capture_default_str();
    c_hh->add_option("--out", h_out, "Write the JSON report here");
    c_hh->add_option("--trace", h_trace, "Write per-step hull CSV here");

    int gm_p = 10, gm_q = 2, gm_r = 2;
    double gm_m = 1.0;
    std::uint64_t gm_seed = 0;
    bool gm_example = false;
    std::string gm_out;
    auto* c_gen = app.add_subcommand("gen-model", "Write a random or example model file");
    c_gen->add_option("--p", gm_p, "Latent size")->capture_default_str();
    c_gen->add_option("--q", gm_q, "Input size")->capture_default_str();
    c_gen->add_option("--r", gm_r, "Output size")->capture_default_str();
    c_gen->add_option("--m", gm_m, "Monotonicity parameter")->capture_default_str();
    c_gen->add_option("--seed", gm_seed, "Random seed")->capture_default_str();
    c_gen->add_flag("--example", gm_example, "Write the two-neuron example network");
    c_gen->add_option("--out", gm_out, "Output path (stdout if omitted)");

    std::vector<const char*> argv;
    argv.push_back("fixcert");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return kUsage;
    }

    try {
        if (c_local->parsed()) return verify_local_cmd(local, out);
        if (c_global->parsed()) {
            return verify_global_cmd(global, g_lo, g_hi, g_depth, g_jobs, g_csv, out);
        }
        if (c_base->parsed()) return baseline_cmd(base, b_kind, b_unroll, b_alpha, out);
        if (c_hh->parsed()) {
            root.mode = h_mode == "reach" ? RootMode::Reach : RootMode::Fix;
            return householder_cmd(root, h_method, h_unroll, h_out, h_trace, out);
        }
        if (c_gen->parsed()) {
            const MonDeqParams params =
                gm_example ? example_model() : random_monotone_model(gm_p, gm_q, gm_r, gm_m, gm_seed);
            if (gm_out.empty()) {
                out << dump_model(params);
            } else {
                save_model(params, gm_out);
            }
            return kSuccess;
        }
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ShapeMismatch& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const InvalidSlope& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const NonConvergence& e) {
        err << "error: " << e.what() << '\n';
        return kNoFixpoint;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

} // namespace fixcert::cli
