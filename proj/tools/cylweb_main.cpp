#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cylweb/bundle.hpp"
#include "cylweb/circle.hpp"
#include "cylweb/forest.hpp"
#include "cylweb/io.hpp"
#include "cylweb/lattice.hpp"
#include "cylweb/rng.hpp"
#include "cylweb/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace cylweb;

namespace {

struct SimulateArgs {
    std::string model;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    // clw
    int n = 8;
    std::int64_t h0 = 0, h1 = 64;
    std::int64_t coalesce_cap = 0;
    std::size_t replicas = 1;
    std::vector<std::int64_t> pairlaw;  // {x1, x2, dh}: exact pair-law CSV
    // bundle / reflected pair
    int walkers = 16;
    double t1 = 1.0;
    double dt = 1e-3;
    std::int64_t stride = 0;
    double pair_gap = 0.0;  // when set: pair coalescence survival CSV
    // cpt
    double lambda = 50.0;
    double r = 0.25;
    // sliced forest
    std::string nk = "pow:0.3";
    std::size_t K = 500;
    std::size_t shift = 0;
    double tail_d = 0.0;  // when set: coalescence-tail survival CSV
    std::string tail_model = "cylinder";
    double censor_threshold = 1e-3;
};

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

/// strict JSON config: every key must be a known simulate option
void apply_config(const std::string& path, SimulateArgs& a) {
    static const std::vector<std::string> allowed{
        "model",  "seed",   "out",     "n",       "h0",       "h1",
        "coalesce_cap",     "pairlaw", "replicas", "walkers", "t1",
        "dt",     "stride", "pair_gap", "lambda",  "r",       "nk",
        "K",      "shift",  "tail_d",  "tail_model", "censor_threshold"};
    const auto j = io::load_config(path, allowed);
    if (j.contains("model")) a.model = j["model"].get<std::string>();
    if (j.contains("seed")) a.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) a.out_dir = j["out"].get<std::string>();
    if (j.contains("n")) a.n = j["n"].get<int>();
    if (j.contains("h0")) a.h0 = j["h0"].get<std::int64_t>();
    if (j.contains("h1")) a.h1 = j["h1"].get<std::int64_t>();
    if (j.contains("coalesce_cap")) a.coalesce_cap = j["coalesce_cap"].get<std::int64_t>();
    if (j.contains("pairlaw")) a.pairlaw = j["pairlaw"].get<std::vector<std::int64_t>>();
    if (j.contains("replicas")) a.replicas = j["replicas"].get<std::size_t>();
    if (j.contains("walkers")) a.walkers = j["walkers"].get<int>();
    if (j.contains("t1")) a.t1 = j["t1"].get<double>();
    if (j.contains("dt")) a.dt = j["dt"].get<double>();
    if (j.contains("stride")) a.stride = j["stride"].get<std::int64_t>();
    if (j.contains("pair_gap")) a.pair_gap = j["pair_gap"].get<double>();
    if (j.contains("lambda")) a.lambda = j["lambda"].get<double>();
    if (j.contains("r")) a.r = j["r"].get<double>();
    if (j.contains("nk")) a.nk = j["nk"].get<std::string>();
    if (j.contains("K")) a.K = j["K"].get<std::size_t>();
    if (j.contains("shift")) a.shift = j["shift"].get<std::size_t>();
    if (j.contains("tail_d")) a.tail_d = j["tail_d"].get<double>();
    if (j.contains("tail_model")) a.tail_model = j["tail_model"].get<std::string>();
    if (j.contains("censor_threshold")) a.censor_threshold = j["censor_threshold"].get<double>();
}

/// resolved-config echo for the manifest
ordered_json simulate_config(const SimulateArgs& a) {
    ordered_json j;
    j["model"] = a.model;
    j["seed"] = a.seed;
    j["out"] = a.out_dir;
    if (a.model == "clw") {
        j["n"] = a.n;
        j["h0"] = a.h0;
        j["h1"] = a.h1;
        j["replicas"] = a.replicas;
        if (a.coalesce_cap > 0) j["coalesce_cap"] = a.coalesce_cap;
        if (!a.pairlaw.empty()) j["pairlaw"] = a.pairlaw;
    } else if (a.model == "cbw-bundle" || a.model == "reflected-pair") {
        j["walkers"] = a.walkers;
        j["t1"] = a.t1;
        j["dt"] = a.dt;
        j["replicas"] = a.replicas;
        j["stride"] = a.stride;
        if (a.pair_gap > 0.0) j["pair_gap"] = a.pair_gap;
    } else if (a.model == "cpt") {
        j["lambda"] = a.lambda;
        j["r"] = a.r;
        j["t1"] = a.t1;
    } else if (a.model == "sliced-forest") {
        j["nk"] = a.nk;
        j["K"] = a.K;
        j["shift"] = a.shift;
        if (a.tail_d > 0.0) {
            j["tail_d"] = a.tail_d;
            j["tail_model"] = a.tail_model;
            j["replicas"] = a.replicas;
        }
    }
    return j;
}

int run_simulate(const SimulateArgs& args) {
    const auto wall0 = std::chrono::steady_clock::now();
    fs::create_directories(args.out_dir);
    io::RunManifest manifest;
    manifest.command = "simulate";
    manifest.config = simulate_config(args);
    manifest.master_seed = args.seed;
    manifest.version = io::library_version();
    std::size_t censored = 0, total_capped_runs = 0;

    if (args.model == "clw") {
        const auto task_seed = derive_seed(args.seed, "clw/field");
        manifest.task_seeds["clw/field"] = task_seed;
        lattice::RademacherField field(args.n, args.h0, args.h1 + 1, task_seed);
        const auto path_file = join_path(args.out_dir, "paths.ndjson");
        io::NdjsonWriter w(path_file);
        int walker_id = 0;
        for (std::int64_t x = 0; x < 2 * args.n; ++x) {
            if (!lattice::is_primal(x, args.h0)) continue;
            const auto path = lattice::trace_path(field, x, args.h0, lattice::Direction::Up,
                                                  args.h1);
            for (std::size_t i = 0; i < path.positions.size(); ++i) {
                ordered_json rec;
                rec["walker_id"] = walker_id;
                rec["height"] = path.start_t + static_cast<std::int64_t>(i);
                rec["x"] = path.positions[i];
                w.record(rec);
            }
            ++walker_id;
        }
        w.close();
        manifest.add_output(path_file);
        if (args.coalesce_cap > 0) {
            const auto csv_file = join_path(args.out_dir, "coalescence.csv");
            io::CsvWriter csv(csv_file, {"replica", "duration", "censored"});
            for (std::size_t rep = 0; rep < args.replicas; ++rep) {
                const auto rep_seed = derive_seed(args.seed, 1000 + rep);
                lattice::RademacherField f(args.n, args.h0, args.h0 + args.coalesce_cap + 1,
                                           rep_seed);
                const auto res = lattice::coalesce_all(f, args.h0, args.coalesce_cap);
                csv.row({std::to_string(rep), std::to_string(res.duration),
                         res.censored ? "1" : "0"});
                ++total_capped_runs;
                if (res.censored) ++censored;
            }
            csv.close();
            manifest.add_output(csv_file);
        }
        if (!args.pairlaw.empty()) {
            if (args.pairlaw.size() != 3) throw std::invalid_argument("--pairlaw needs x1,x2,dh");
            const auto law = lattice::enumerate_pair_law(args.n, args.pairlaw[0], args.pairlaw[1],
                                                         0, args.pairlaw[2]);
            const auto csv_file = join_path(args.out_dir, "pairlaw.csv");
            io::CsvWriter csv(csv_file, {"path1", "path2", "nb", "prob_num", "prob_den"});
            auto fmt_path = [](const std::vector<std::int64_t>& p) {
                std::string s;
                for (std::size_t i = 0; i < p.size(); ++i) {
                    if (i) s += '|';
                    s += std::to_string(p[i]);
                }
                return s;
            };
            for (const auto& e : law.entries) {
                csv.row({fmt_path(e.path_up), fmt_path(e.path_down), std::to_string(e.contacts),
                         "1", std::to_string(1ULL << e.closed_exponent)});
            }
            csv.close();
            manifest.add_output(csv_file);
        }
    } else if (args.model == "cbw-bundle") {
        const auto steps = static_cast<std::int64_t>(std::llround(args.t1 / args.dt));
        const web::TimeGrid grid{0.0, args.dt, steps};
        const std::int64_t stride = args.stride > 0 ? args.stride : std::max<std::int64_t>(1, steps / 50);
        const auto file = join_path(args.out_dir, "bundle.ndjson");
        io::NdjsonWriter w(file);
        for (std::size_t rep = 0; rep < args.replicas; ++rep) {
            const auto rep_seed = derive_seed(args.seed, rep);
            if (rep == 0) manifest.task_seeds["bundle/replica0"] = rep_seed;
            std::vector<double> xs(static_cast<std::size_t>(args.walkers));
            std::vector<double> ts(xs.size(), 0.0);
            for (int i = 0; i < args.walkers; ++i)
                xs[static_cast<std::size_t>(i)] = static_cast<double>(i) / args.walkers;
            const auto bundle = web::sample_coalescing_bundle(xs, ts, grid, rep_seed);
            for (std::int64_t s = 0; s <= steps; s += stride) {
                for (int wk = 0; wk < args.walkers; ++wk) {
                    ordered_json rec;
                    rec["replica"] = rep;
                    rec["walker_id"] = wk;
                    rec["t"] = grid.time_at(s);
                    rec["x"] = bundle.pos[static_cast<std::size_t>(s)][static_cast<std::size_t>(wk)];
                    rec["root_id"] = bundle.root_at(wk, grid.time_at(s));
                    w.record(rec);
                }
            }
        }
        w.close();
        manifest.add_output(file);
        if (args.pair_gap > 0.0) {
            // pair coalescence-time survival curve at the requested gap
            std::vector<double> times;
            times.reserve(args.replicas);
            for (std::size_t rep = 0; rep < args.replicas; ++rep) {
                Rng rng(derive_seed(args.seed, 500000 + rep));
                times.push_back(web::pair_coalescence_time(args.pair_gap, args.dt, args.t1, rng).time);
            }
            std::sort(times.begin(), times.end());
            const auto csv_file = join_path(args.out_dir, "pair_survival.csv");
            io::CsvWriter csv(csv_file, {"t", "survival", "stderr"});
            const double n = static_cast<double>(times.size());
            for (std::size_t i = 0; i < times.size(); ++i) {
                const double s = 1.0 - static_cast<double>(i + 1) / n;
                csv.row({io::fmt_double(times[i]), io::fmt_double(s),
                         io::fmt_double(std::sqrt(std::max(s * (1 - s), 0.0) / n))});
            }
            csv.close();
            manifest.add_output(csv_file);
        }
    } else if (args.model == "reflected-pair") {
        const auto steps = static_cast<std::int64_t>(std::llround(args.t1 / args.dt));
        const web::TimeGrid grid{0.0, args.dt, steps};
        const std::int64_t stride = args.stride > 0 ? args.stride : std::max<std::int64_t>(1, steps / 50);
        const auto file = join_path(args.out_dir, "reflected_pair.ndjson");
        io::NdjsonWriter w(file);
        for (std::size_t rep = 0; rep < args.replicas; ++rep) {
            const auto rep_seed = derive_seed(args.seed, rep);
            if (rep == 0) manifest.task_seeds["pair/replica0"] = rep_seed;
            const auto pair = web::sample_reflected_pair(grid, rep_seed);
            for (std::int64_t s = 0; s <= steps; s += stride) {
                ordered_json rec;
                rec["replica"] = rep;
                rec["t"] = grid.time_at(s);
                rec["y_up"] = pair.y_up[static_cast<std::size_t>(s)];
                rec["y_down"] = pair.y_down[static_cast<std::size_t>(s)];
                rec["gap"] = pair.gap[static_cast<std::size_t>(s)];
                w.record(rec);
            }
        }
        w.close();
        manifest.add_output(file);
    } else if (args.model == "cpt") {
        const auto task_seed = derive_seed(args.seed, "cpt/points");
        manifest.task_seeds["cpt/points"] = task_seed;
        const auto sample = forest::sample_cpt(args.lambda, args.r, 0.0, args.t1, task_seed);
        const auto file = join_path(args.out_dir, "cpt.ndjson");
        io::NdjsonWriter w(file);
        for (std::size_t i = 0; i < sample.points.size(); ++i) {
            ordered_json rec;
            rec["point_id"] = i;
            rec["x"] = sample.points[i].x;
            rec["t"] = sample.points[i].t;
            rec["parent"] = sample.parent[i];
            w.record(rec);
        }
        w.close();
        manifest.add_output(file);
    } else if (args.model == "sliced-forest") {
        const auto schedule = forest::build_schedule(args.nk, args.shift + args.K);
        const auto task_seed = derive_seed(args.seed, "forest/points");
        manifest.task_seeds["forest/points"] = task_seed;
        const auto f = forest::sample_sliced_forest(schedule, args.shift, args.K, task_seed);
        const auto file = join_path(args.out_dir, "forest.ndjson");
        io::NdjsonWriter w(file);
        for (std::size_t k = 0; k + 1 < f.angles.size(); ++k) {
            for (std::size_t i = 0; i < f.angles[k].size(); ++i) {
                ordered_json rec;
                rec["slice_k"] = f.k_lo + k;
                rec["angle"] = f.angles[k][i];
                const int anc = f.ancestor[k][i];
                rec["ancestor_slice"] = f.k_lo + k + 1;
                rec["ancestor_angle"] =
                    anc >= 0 ? f.angles[k + 1][static_cast<std::size_t>(anc)] : f.angles[k][i];
                w.record(rec);
            }
        }
        w.close();
        manifest.add_output(file);
        const auto sched_file = join_path(args.out_dir, "schedule.csv");
        io::CsvWriter csv(sched_file, {"k", "n_k", "sigma2_k", "V_k"});
        for (std::size_t k = 1; k <= schedule.K(); ++k) {
            csv.row({std::to_string(k), io::fmt_double(schedule.n[k - 1]),
                     io::fmt_double(schedule.sigma2[k - 1]), io::fmt_double(schedule.V[k - 1])});
        }
        csv.close();
        manifest.add_output(sched_file);
        if (args.tail_d > 0.0) {
            const auto model = args.tail_model == "planar" ? forest::TailModel::Planar
                                                           : forest::TailModel::Cylinder;
            const auto curve = forest::coalescence_tail(model, schedule, args.tail_d, args.K,
                                                        args.replicas, args.seed, args.shift);
            const auto tail_file = join_path(args.out_dir, "survival.csv");
            io::CsvWriter csv2(tail_file,
                               {"K", "h_K", "survival", "stderr", "normalized_stat"});
            for (std::size_t k = 0; k < curve.h.size(); ++k) {
                csv2.row({std::to_string(k + 1), io::fmt_double(curve.h[k]),
                          io::fmt_double(curve.survival[k]), io::fmt_double(curve.std_error[k]),
                          io::fmt_double(curve.normalized[k])});
            }
            csv2.close();
            manifest.add_output(tail_file);
        }
    } else {
        std::cerr << nlohmann::json{{"error", "unknown model"}, {"model", args.model}}.dump()
                  << "\n";
        return 2;
    }

    manifest.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    manifest.write(join_path(args.out_dir, "manifest.json"));

    if (total_capped_runs > 0) {
        const double frac = static_cast<double>(censored) / static_cast<double>(total_capped_runs);
        if (frac > args.censor_threshold) {
            std::cerr << nlohmann::json{{"error", "censoring budget exceeded"},
                                        {"fraction", frac}}
                             .dump()
                      << "\n";
            return 3;
        }
    }
    return 0;
}

int run_export(const std::string& input, const std::string& winding, const std::string& out) {
    const auto wf = winding_by_name(winding);
    std::ifstream in(input);
    if (!in) {
        std::cerr << nlohmann::json{{"error", "cannot open input"}, {"path", input}}.dump()
                  << "\n";
        return 2;
    }
    const bool csv_mode = out.size() > 4 && out.substr(out.size() - 4) == ".csv";
    std::size_t skipped = 0, written = 0;
    std::unique_ptr<io::CsvWriter> csv;
    std::unique_ptr<io::NdjsonWriter> nd;
    if (csv_mode)
        csv = std::make_unique<io::CsvWriter>(
            out, std::vector<std::string>{"id", "theta", "r", "x", "y"});
    else
        nd = std::make_unique<io::NdjsonWriter>(out);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto rec = nlohmann::json::parse(line);
        const double height = rec.contains("t") ? rec["t"].get<double>()
                                                : rec["height"].get<double>();
        const double x = rec.contains("x") ? rec["x"].get<double>() : 0.0;
        long long id = 0;
        if (rec.contains("walker_id")) id = rec["walker_id"].get<long long>();
        else if (rec.contains("point_id")) id = rec["point_id"].get<long long>();
        if (!wf.height_in_range(height)) {
            ++skipped;
            continue;
        }
        const auto rp = project_with(CylPoint(CirclePos(x), height), wf);
        const double px = rp.r * std::cos(rp.theta);
        const double py = rp.r * std::sin(rp.theta);
        if (csv_mode) {
            csv->row({std::to_string(id), io::fmt_double(rp.theta), io::fmt_double(rp.r),
                      io::fmt_double(px), io::fmt_double(py)});
        } else {
            ordered_json o;
            o["id"] = id;
            o["theta"] = rp.theta;
            o["r"] = rp.r;
            o["x"] = px;
            o["y"] = py;
            nd->record(o);
        }
        ++written;
    }
    std::cerr << nlohmann::json{{"written", written}, {"skipped", skipped}}.dump() << "\n";
    return 0;
}

int run_info() {
    ordered_json j;
    j["name"] = "cylweb";
    j["version"] = io::library_version();
    j["build_type"] =
#ifdef NDEBUG
        "release";
#else
        "debug";
#endif
    ordered_json defaults;
    defaults["simulate"] = simulate_config(SimulateArgs{});
    defaults["verify"] = {{"suite", "all"}, {"seed", 20260801}, {"quick", false}, {"threads", 1}};
    j["defaults"] = defaults;
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cylweb: coalescing-path webs on the cylinder"};
    app.require_subcommand(1);

    SimulateArgs sim;
    std::string sim_config;
    auto* s = app.add_subcommand("simulate", "run a model and export NDJSON/CSV + manifest");
    s->add_option("--config", sim_config, "JSON config file (unknown keys rejected)");
    s->add_option("--model", sim.model, "clw | cbw-bundle | reflected-pair | cpt | sliced-forest");
    s->add_option("--seed", sim.seed, "master seed");
    s->add_option("--out", sim.out_dir, "output directory");
    s->add_option("--n", sim.n, "lattice half-circumference n (circumference 2n)");
    s->add_option("--h0", sim.h0, "window bottom height");
    s->add_option("--h1", sim.h1, "window top height");
    s->add_option("--coalesce-cap", sim.coalesce_cap, "also run capped slice coalescence");
    s->add_option("--pairlaw", sim.pairlaw, "x1 x2 dh: export the exact pair law as CSV")
        ->expected(3);
    s->add_option("--replicas", sim.replicas, "replica count");
    s->add_option("--walkers", sim.walkers, "walker count");
    s->add_option("--t1", sim.t1, "time horizon");
    s->add_option("--dt", sim.dt, "time step");
    s->add_option("--stride", sim.stride, "output decimation stride");
    s->add_option("--pair-gap", sim.pair_gap, "also export a pair coalescence survival curve");
    s->add_option("--lambda", sim.lambda, "point intensity");
    s->add_option("--r", sim.r, "strip half-width (geometric, <= 1/2)");
    s->add_option("--nk", sim.nk, "intensity sequence, e.g. pow:0.3 or const:2");
    s->add_option("--K", sim.K, "slice count");
    s->add_option("--shift", sim.shift, "forest shift index j");
    s->add_option("--tail-d", sim.tail_d, "also export a coalescence-tail survival curve");
    s->add_option("--tail-model", sim.tail_model, "cylinder | planar");
    s->add_option("--censor-threshold", sim.censor_threshold, "max tolerated censored fraction");

    std::string suite = "all";
    verify::SuiteOptions vopt;
    std::size_t verify_n = 0;
    std::string verify_out;
    auto* v = app.add_subcommand("verify", "run a statistical verification suite");
    v->add_option("suite", suite,
                  "enumeration|kernel|mu|skorokhod|laplace|fulmek|reflected|tails|dominance|"
                  "donsker|all");
    v->add_option("--seed", vopt.seed, "master seed");
    v->add_option("--N", verify_n, "override replica count");
    v->add_flag("--quick", vopt.quick, "reduced-N smoke run");
    v->add_option("--threads", vopt.threads, "worker threads");
    v->add_option("--out", verify_out, "write aggregated report JSON here");

    std::string exp_input, exp_winding = "standard", exp_out = "projection.ndjson";
    auto* e = app.add_subcommand("export-projection", "project path records to the radial plane");
    e->add_option("--input", exp_input, "NDJSON with height/t and x fields")->required();
    e->add_option("--winding", exp_winding, "standard | log | arctan");
    e->add_option("--out", exp_out, "output file (.ndjson or .csv)");

    app.add_subcommand("info", "print version and defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        if (err.get_exit_code() == 0) return 0;  // --help
        std::cerr << nlohmann::json{{"error", "usage"}, {"what", err.what()}}.dump() << "\n";
        return 2;
    }

    try {
        if (s->parsed()) {
            if (!sim_config.empty()) apply_config(sim_config, sim);
            if (sim.model.empty()) {
                std::cerr << nlohmann::json{{"error", "usage"}, {"what", "--model is required"}}
                                 .dump()
                          << "\n";
                return 2;
            }
            return run_simulate(sim);
        }
        if (v->parsed()) {
            vopt.n_override = verify_n;
            const auto results = verify::run_suite(suite, vopt);
            const auto j = verify::results_to_json(results);
            if (!verify_out.empty()) {
                std::ofstream out(verify_out);
                out << j.dump(2) << "\n";
            }
            return j["all_pass"].get<bool>() ? 0 : 1;
        }
        if (e->parsed()) return run_export(exp_input, exp_winding, exp_out);
        return run_info();
    } catch (const std::invalid_argument& err) {
        std::cerr << nlohmann::json{{"error", "usage"}, {"what", err.what()}}.dump() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << nlohmann::json{{"error", "runtime"}, {"what", err.what()}}.dump() << "\n";
        return 2;
    }
}
