// Command-line front end: solve single instances, fuzz against the oracle,
// gradient-check, benchmark, and run the sampling simulator.
//
// Exit codes: 0 success, 1 check failure, 2 usage or input error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cabb/cabb.hpp"
#include "cabb/report.hpp"

using namespace cabb;

namespace {

CabbInstance parse_instance(const std::string& line) {
    CabbInstance inst;
    double g[4], a[4], c[2], p[4], b;
    const int n = std::sscanf(line.c_str(),
                              "gt=%lf,%lf,%lf,%lf anchor=%lf,%lf,%lf,%lf "
                              "crop=%lf,%lf pred=%lf,%lf,%lf,%lf beta=%lf",
                              &g[0], &g[1], &g[2], &g[3], &a[0], &a[1], &a[2], &a[3], &c[0], &c[1],
                              &p[0], &p[1], &p[2], &p[3], &b);
    if (n != 15) throw std::invalid_argument("malformed instance line: " + line);
    inst.gt = Box{{g[0], g[1]}, {g[2], g[3]}};
    inst.anchor = Box{{a[0], a[1]}, {a[2], a[3]}};
    inst.crop = CropRect{{0.0, 0.0}, {c[0], c[1]}};
    inst.pred = Delta{{p[0], p[1]}, {p[2], p[3]}};
    inst.beta = b;
    return inst;
}

std::vector<double> parse_beta_set(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    if (out.empty()) throw std::invalid_argument("empty beta set");
    for (double b : out)
        if (!(b > 0.0)) throw std::invalid_argument("beta must be positive");
    return out;
}

int cmd_solve(const std::string& line, const std::string& box_format) {
    const CabbInstance inst = parse_instance(line);
    SolverConfig cfg;
    cfg.beta = HuberParam{inst.beta};
    const auto sol = cabb_loss(inst.pred, inst.gt, inst.anchor, inst.crop, cfg);

    const BoxFormat fmt = box_format == "corner" ? BoxFormat::Corner : BoxFormat::Center;
    const Box target = decode(inst.anchor, sol.delta_star);
    std::printf("loss=%.12g\n", sol.loss);
    std::printf("delta_star=%.12g,%.12g omega_star=%.12g,%.12g\n", sol.delta_star.delta[0],
                sol.delta_star.delta[1], sol.delta_star.omega[0], sol.delta_star.omega[1]);
    std::printf("target_box=%s\n", format_box(target, fmt).c_str());
    std::printf("case_x=%s case_y=%s\n", to_string(sol.per_dim_case[0]),
                to_string(sol.per_dim_case[1]));
    std::printf("grad_delta=%.12g,%.12g grad_omega=%.12g,%.12g\n", sol.grad_delta[0],
                sol.grad_delta[1], sol.grad_omega[0], sol.grad_omega[1]);
    return 0;
}

int cmd_fuzz(int n, std::uint64_t seed, const std::vector<double>& betas, double tolerance,
             int grid_points) {
    Rng rng(seed);
    OracleConfig ocfg;
    ocfg.grid_points = grid_points;
    int failures = 0;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double beta = betas[static_cast<std::size_t>(i) % betas.size()];
        const auto inst = random_instance(rng, stratified_kinds(static_cast<std::size_t>(i)), beta);
        SolverConfig cfg;
        cfg.beta = HuberParam{beta};
        const auto cert = certify(inst, cfg, ocfg);
        worst = std::max(worst, cert.worst_gap);
        if (cert.worst_gap > tolerance || cert.feasibility_error > 1e-7) {
            ++failures;
            std::printf("FAIL gap=%.3g feas=%.3g\n  %s\n", cert.worst_gap,
                        cert.feasibility_error, inst.to_text().c_str());
        }
    }
    std::printf("%d/%d instances within %.3g of the oracle (worst gap %.3g)\n", n - failures, n,
                tolerance, worst);
    return failures ? 1 : 0;
}

int cmd_gradcheck(int n, std::uint64_t seed, double h, double tol) {
    Rng rng(seed);
    SolverConfig cfg;
    int checked = 0, bad = 0;
    for (int i = 0; i < n; ++i) {
        const auto inst = random_instance(rng, stratified_kinds(static_cast<std::size_t>(i)), 1.0);
        const auto gc = grad_check(inst, cfg, h);
        ++checked;
        if (gc.stable && gc.max_rel_error > tol) {
            ++bad;
            std::printf("FAIL rel_err=%.3g\n  %s\n", gc.max_rel_error, inst.to_text().c_str());
        }
    }
    std::printf("%d/%d stable gradient checks within %.3g\n", checked - bad, checked, tol);
    return bad ? 1 : 0;
}

int cmd_bench(int n, int batch) {
    Rng rng(1);
    std::vector<CabbInstance> pool;
    for (int i = 0; i < batch; ++i)
        pool.push_back(random_instance(rng, stratified_kinds(static_cast<std::size_t>(i)), 1.0));
    SolverConfig cfg;
    volatile double sink = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < n; ++i) {
        const auto& inst = pool[static_cast<std::size_t>(i) % pool.size()];
        sink = sink + cabb_loss(inst.pred, inst.gt, inst.anchor, inst.crop, cfg).loss;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d solves in %.3f s: %.0f solves/s, %.3f ms per %d-box batch\n", n, secs,
                n / secs, secs / n * batch * 1000.0, batch);
    (void)sink;
    return 0;
}

int cmd_sample(const std::string& annotations_path, const std::string& mode_name, int n,
               std::uint64_t seed, const std::string& out_dir, int synth_instances) {
    AnnotationSet set;
    if (!annotations_path.empty()) {
        set = load_annotations(annotations_path);
    } else {
        SynthSpec spec;
        spec.n_instances = synth_instances;
        spec.seed = seed;
        set = synth_dataset(spec);
    }
    const SampleMode mode = mode_name == "cus" ? SampleMode::CUS : SampleMode::ISUS;
    SamplerConfig cfg;
    cfg.seed = seed;
    PyramidSpec spec;
    Sampler sampler(set, cfg, spec);

    std::filesystem::create_directories(out_dir);
    Rng rng(seed);
    std::vector<SampleDecision> decisions;
    std::map<int, std::int64_t> levels;
    decisions.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        decisions.push_back(sampler.draw(mode, rng));
        if (auto lvl = sampler.assigned_level(decisions.back())) ++levels[*lvl];
    }

    Rng iou_rng(seed + 1);
    const std::vector<double> size_edges{0, 32, 64, 128, 256, 512, 1024, 1e9};
    const auto iou_rows =
        crop_iou_by_size(set, cfg, spec, mode, std::max(1, n / 10), size_edges, iou_rng);
    const auto scales = scale_histogram(set, {0, 16, 32, 64, 128, 256, 512, 1024, 1e9});

    auto emit = [&](const char* name, auto&& writer) {
        const auto path = std::filesystem::path(out_dir) / name;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw DataError("cannot write " + path.string());
        writer(os);
    };
    emit("decisions.csv", [&](std::ostream& os) { write_decisions_csv(os, decisions); });
    emit("levels.csv", [&](std::ostream& os) { write_levels_csv(os, levels); });
    emit("crop_iou.csv", [&](std::ostream& os) { write_crop_iou_csv(os, iou_rows); });
    emit("scales.csv", [&](std::ostream& os) { write_scales_csv(os, scales); });
    std::printf("wrote %d decisions to %s (mode %s, seed %llu)\n", n, out_dir.c_str(),
                mode_name.c_str(), static_cast<unsigned long long>(seed));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"crop-aware bounding-box loss toolkit"};
    app.require_subcommand(1);

    std::string instance_line, box_format = "center";
    auto* solve = app.add_subcommand("solve", "solve one instance given on the command line");
    solve->add_option("instance", instance_line,
                      "gt=cx,cy,w,h anchor=cx,cy,w,h crop=W,H pred=dx,dy,wx,wy beta=B")
        ->required();
    solve->add_option("--box-format", box_format, "center|corner output for the target box")
        ->check(CLI::IsMember({"center", "corner"}));

    int fuzz_n = 1000, fuzz_grid = 2000;
    std::uint64_t fuzz_seed = 1;
    std::string beta_set = "0.111111111111,1.0";
    double fuzz_tol = 1e-6;
    auto* fuzz = app.add_subcommand("fuzz", "randomized comparison against the grid oracle");
    fuzz->add_option("-n,--count", fuzz_n)->check(CLI::PositiveNumber);
    fuzz->add_option("--seed", fuzz_seed);
    fuzz->add_option("--beta-set", beta_set, "comma-separated beta values");
    fuzz->add_option("--tolerance", fuzz_tol)->check(CLI::PositiveNumber);
    fuzz->add_option("--grid-points", fuzz_grid)->check(CLI::Range(100, 1000000));

    int gc_n = 1000;
    std::uint64_t gc_seed = 1;
    double gc_h = 1e-5, gc_tol = 1e-3;
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gc->add_option("-n,--count", gc_n)->check(CLI::PositiveNumber);
    gc->add_option("--seed", gc_seed);
    gc->add_option("--step", gc_h)->check(CLI::PositiveNumber);
    gc->add_option("--tolerance", gc_tol)->check(CLI::PositiveNumber);

    int bench_n = 200000, bench_batch = 512;
    auto* bench = app.add_subcommand("bench", "solver throughput measurement");
    bench->add_option("-n,--count", bench_n)->check(CLI::PositiveNumber);
    bench->add_option("--batch", bench_batch)->check(CLI::PositiveNumber);

    std::string ann_path, mode_name = "isus", out_dir = "sample_out";
    int sample_n = 10000, synth_instances = 1000;
    std::uint64_t sample_seed = 1;
    auto* sample = app.add_subcommand("sample", "run the sampling simulator, emit CSV reports");
    sample->add_option("--annotations", ann_path, "annotation JSON (omit to synthesize)");
    sample->add_option("--mode", mode_name)->check(CLI::IsMember({"cus", "isus"}));
    sample->add_option("-n,--count", sample_n)->check(CLI::PositiveNumber);
    sample->add_option("--seed", sample_seed);
    sample->add_option("--out", out_dir);
    sample->add_option("--synth-instances", synth_instances)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (solve->parsed()) return cmd_solve(instance_line, box_format);
        if (fuzz->parsed())
            return cmd_fuzz(fuzz_n, fuzz_seed, parse_beta_set(beta_set), fuzz_tol, fuzz_grid);
        if (gc->parsed()) return cmd_gradcheck(gc_n, gc_seed, gc_h, gc_tol);
        if (bench->parsed()) return cmd_bench(bench_n, bench_batch);
        if (sample->parsed())
            return cmd_sample(ann_path, mode_name, sample_n, sample_seed, out_dir,
                              synth_instances);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
