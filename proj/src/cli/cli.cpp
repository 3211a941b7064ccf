#include "stssl/cli/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stssl/core/io.hpp"
#include "stssl/core/threadpool.hpp"
#include "stssl/dataio/synth.hpp"
#include "stssl/trainer/trainer.hpp"

namespace stssl::cli {

using nlohmann::json;

namespace {

struct SynthArgs {
    std::string out;
    int videos = 40, classes = 5, frames = 16;
    std::string size = "64x64";
    std::uint64_t seed = 0;
    double untrimmed_frac = 0.0, val_frac = 0.2;
    std::string mode = "box";
    int distractors = 1;
    bool force = false;
};

int cmd_synth(const SynthArgs& a) {
    namespace fs = std::filesystem;
    const fs::path out(a.out);
    if (fs::exists(out) && !fs::is_empty(out) && !a.force) {
        std::cerr << "synth: output directory " << out
                  << " exists and is not empty (use --force to overwrite)\n";
        return 2;
    }
    dataio::SynthConfig cfg;
    cfg.num_videos = a.videos;
    cfg.classes = a.classes;
    cfg.frames_per_video = a.frames;
    const auto x = a.size.find('x');
    if (x == std::string::npos) throw std::invalid_argument("--size must look like 64x64");
    cfg.width = std::stoi(a.size.substr(0, x));
    cfg.height = std::stoi(a.size.substr(x + 1));
    cfg.seed = a.seed;
    cfg.untrimmed_fraction = a.untrimmed_frac;
    cfg.val_fraction = a.val_frac;
    cfg.mode = a.mode == "mask" ? dataio::AnnotationMode::mask : dataio::AnnotationMode::box;
    cfg.distractors = a.distractors;

    const auto s = dataio::generate_synthetic_dataset(cfg, out);
    std::cout << "wrote " << s.num_videos << " videos (" << s.classes << " classes, "
              << s.num_videos - s.untrimmed << " trimmed / " << s.untrimmed << " untrimmed, "
              << s.val_videos << " validation) to " << out << "\n";
    return 0;
}

struct TrainArgs {
    std::string data, out, config_file;
    std::string mode;
    double labeled_frac = -1;
    int epochs = -1;
    long long seed = -1;
    std::vector<std::string> overrides;
    int unlabeled_limit = -1;
    bool resume = false;
};

trainer::TrainConfig resolve_config(const TrainArgs& a) {
    json flat = trainer::TrainConfig{}.to_json();
    if (!a.config_file.empty()) {
        const json file = read_json_file(a.config_file);
        for (auto it = file.begin(); it != file.end(); ++it) {
            if (!flat.contains(it.key()))
                throw std::invalid_argument("config file key '" + it.key() + "' is unknown");
            flat[it.key()] = it.value();
        }
    }
    for (const auto& kv : a.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        trainer::TrainConfig::apply_override(flat, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!a.mode.empty()) flat["mode"] = a.mode;
    if (a.labeled_frac >= 0) flat["labeled_fraction"] = a.labeled_frac;
    if (a.epochs >= 0) flat["epochs"] = a.epochs;
    if (a.seed >= 0) flat["seed"] = static_cast<std::uint64_t>(a.seed);
    if (a.unlabeled_limit >= 0) flat["unlabeled_limit"] = a.unlabeled_limit;
    return trainer::TrainConfig::from_json(flat);
}

int cmd_train(const TrainArgs& a) {
    auto cfg = resolve_config(a);
    const auto ds = dataio::load_dataset(a.data);
    auto split = dataio::split_labeled(ds, cfg.labeled_fraction, cfg.seed);
    if (cfg.unlabeled_limit >= 0) dataio::limit_unlabeled(split, cfg.unlabeled_limit);

    trainer::Trainer tr(cfg, ds, split, a.out);
    const auto result = tr.fit(a.resume);
    std::cout << "training done: " << result.steps << " steps, best f-mAP@0.5 = "
              << result.best_f_map05 << "\n"
              << "checkpoints: " << result.best_checkpoint << " (best), "
              << result.last_checkpoint << " (last)\n";
    return 0;
}

struct EvalArgs {
    std::string data, ckpt, out;
    std::string split = "val";
    double threshold = -1;
};

int cmd_eval(const EvalArgs& a) {
    const auto ds = dataio::load_dataset(a.data);
    const json manifest = read_json_file(std::filesystem::path(a.ckpt) / "manifest.json");
    auto cfg = trainer::TrainConfig::from_json(manifest.at("train_config"));
    if (cfg.model.capsule.num_capsules != ds.class_count()) {
        std::ostringstream os;
        os << "eval: checkpoint expects " << cfg.model.capsule.num_capsules
           << " classes but dataset has " << ds.class_count();
        throw std::runtime_error(os.str());
    }
    model::Network<float> net(cfg.model);
    trainer::TrainState state = trainer::load_checkpoint(a.ckpt, cfg, net);

    trainer::EvalParams ep;
    ep.frames = cfg.frames;
    ep.skip = cfg.skip;
    ep.resolution = cfg.resolution;
    if (a.threshold >= 0) ep.threshold = a.threshold;

    std::vector<std::string> ids;
    if (a.split == "val") ids = ds.val_ids;
    else if (a.split == "train") ids = ds.train_ids;
    else {
        ids = ds.train_ids;
        ids.insert(ids.end(), ds.val_ids.begin(), ds.val_ids.end());
    }
    if (ids.empty()) throw std::runtime_error("eval: selected split '" + a.split + "' is empty");

    const auto report = trainer::evaluate_model(net, state.params, ds, ids, ep);
    if (!a.out.empty()) write_json_file(a.out, report.to_json());

    std::cout << "          f-mAP     v-mAP\n";
    for (const auto& [key, tr] : report.at)
        std::cout << key << "   " << tr.f_map << "   " << tr.v_map << "\n";
    return 0;
}

struct SweepArgs {
    std::string data, out;
    std::vector<std::string> modes = {"supervised", "semi-var"};
    std::vector<double> fractions = {0.2};
    std::vector<int> seeds = {0, 1, 2};
    std::vector<double> unlabeled_amounts;  // in multiples of the labeled count
    int epochs = -1;
    std::vector<std::string> overrides;
    int jobs = 1;
};

struct SweepRun {
    std::string mode;
    double fraction = 0;
    double amount = -1;
    int seed = 0;
    double f_map05 = 0, v_map05 = 0, f_map02 = 0, v_map02 = 0;
};

SweepRun run_one(const SweepArgs& a, const std::string& mode, double fraction, double amount,
                 int seed, const dataio::Dataset& ds, ThreadPool* pool) {
    TrainArgs ta;
    ta.mode = mode;
    ta.labeled_frac = fraction;
    ta.epochs = a.epochs;
    ta.seed = seed;
    ta.overrides = a.overrides;
    auto cfg = resolve_config(ta);

    auto split = dataio::split_labeled(ds, fraction, static_cast<std::uint64_t>(seed));
    if (amount >= 0)
        dataio::limit_unlabeled(split, static_cast<int>(std::llround(
                                           amount * static_cast<double>(split.labeled_ids.size()))));

    std::ostringstream name;
    name << mode << "_f" << fraction;
    if (amount >= 0) name << "_u" << amount;
    name << "_s" << seed;
    const auto run_dir = std::filesystem::path(a.out) / name.str();

    trainer::Trainer tr(cfg, ds, split, run_dir, pool);
    tr.fit(false);

    // Evaluate the best checkpoint on the validation split.
    model::Network<float> net(tr.network().config());
    auto state = trainer::load_checkpoint(run_dir / "best", cfg, net);
    trainer::EvalParams ep;
    ep.frames = cfg.frames;
    ep.skip = cfg.skip;
    ep.resolution = cfg.resolution;
    ep.threshold = cfg.det_threshold;
    const auto report = trainer::evaluate_model(net, state.params, ds, ds.val_ids, ep, pool);
    write_json_file(run_dir / "report.json", report.to_json());

    SweepRun r;
    r.mode = mode;
    r.fraction = fraction;
    r.amount = amount;
    r.seed = seed;
    r.f_map05 = report.at.at("iou_0.5").f_map;
    r.v_map05 = report.at.at("iou_0.5").v_map;
    r.f_map02 = report.at.at("iou_0.2").f_map;
    r.v_map02 = report.at.at("iou_0.2").v_map;
    return r;
}

json aggregate(const std::vector<SweepRun>& runs) {
    // Group by (mode, fraction, amount).
    std::map<std::string, std::vector<const SweepRun*>> groups;
    for (const auto& r : runs) {
        std::ostringstream k;
        k << r.mode << "|" << r.fraction << "|" << r.amount;
        groups[k.str()].push_back(&r);
    }
    json entries = json::array();
    for (const auto& [key, rs] : groups) {
        json e;
        e["mode"] = rs[0]->mode;
        e["fraction"] = rs[0]->fraction;
        if (rs[0]->amount >= 0) e["unlabeled_amount"] = rs[0]->amount;
        auto stat = [&](auto get) {
            double mean = 0;
            for (auto* r : rs) mean += get(*r);
            mean /= static_cast<double>(rs.size());
            double var = 0;
            for (auto* r : rs) var += (get(*r) - mean) * (get(*r) - mean);
            var /= static_cast<double>(rs.size());
            json vals = json::array();
            for (auto* r : rs) vals.push_back(get(*r));
            return json{{"mean", mean}, {"std", std::sqrt(var)}, {"values", vals}};
        };
        e["f_map_0.5"] = stat([](const SweepRun& r) { return r.f_map05; });
        e["v_map_0.5"] = stat([](const SweepRun& r) { return r.v_map05; });
        e["f_map_0.2"] = stat([](const SweepRun& r) { return r.f_map02; });
        e["v_map_0.2"] = stat([](const SweepRun& r) { return r.v_map02; });
        json seeds = json::array();
        for (auto* r : rs) seeds.push_back(r->seed);
        e["seeds"] = seeds;
        entries.push_back(e);
    }
    return json{{"entries", entries}};
}

int cmd_sweep(const SweepArgs& a) {
    const auto ds = dataio::load_dataset(a.data);
    std::filesystem::create_directories(a.out);

    struct Task {
        std::string mode;
        double fraction, amount;
        int seed;
    };
    std::vector<Task> tasks;
    const std::vector<double> amounts =
        a.unlabeled_amounts.empty() ? std::vector<double>{-1} : a.unlabeled_amounts;
    for (const auto& mode : a.modes)
        for (double f : a.fractions)
            for (double amt : amounts)
                for (int s : a.seeds) tasks.push_back({mode, f, amt, s});

    std::vector<SweepRun> runs(tasks.size());
    if (a.jobs <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const auto& t = tasks[i];
            runs[i] = run_one(a, t.mode, t.fraction, t.amount, t.seed, ds, nullptr);
            std::cout << "[" << i + 1 << "/" << tasks.size() << "] " << t.mode << " f=" << t.fraction
                      << " seed=" << t.seed << " v-mAP@0.5=" << runs[i].v_map05 << "\n";
        }
    } else {
        // Independent runs on private pools; no shared mutable state.
        const int per_run =
            std::max(1, ThreadPool::global_thread_count() / std::max(1, a.jobs));
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (int j = 0; j < a.jobs; ++j)
            workers.emplace_back([&] {
                ThreadPool pool(per_run);
                std::size_t i;
                while ((i = next.fetch_add(1)) < tasks.size()) {
                    const auto& t = tasks[i];
                    runs[i] = run_one(a, t.mode, t.fraction, t.amount, t.seed, ds, &pool);
                }
            });
        for (auto& w : workers) w.join();
    }

    const json combined = aggregate(runs);
    write_json_file(std::filesystem::path(a.out) / "sweep_report.json", combined);
    std::cout << "sweep report: " << (std::filesystem::path(a.out) / "sweep_report.json") << "\n";
    return 0;
}

struct PlotArgs {
    std::vector<std::string> reports;
    std::string out = "plot.svg";
    std::string metric = "v_map_0.5";
    std::string x_axis = "fraction";
};

int cmd_plot(const PlotArgs& a) {
    struct Series {
        std::string label;
        std::vector<std::pair<double, double>> pts;
    };
    std::map<std::string, Series> series;
    for (const auto& file : a.reports) {
        json j;
        try {
            j = read_json_file(file);
            for (const auto& e : j.at("entries")) {
                const std::string mode = e.at("mode").get<std::string>();
                const double x = a.x_axis == "amount"
                                     ? e.value("unlabeled_amount", 0.0)
                                     : e.at("fraction").get<double>();
                const double y = e.at(a.metric).at("mean").get<double>();
                series[mode].label = mode;
                series[mode].pts.emplace_back(x, y);
            }
        } catch (const std::exception& ex) {
            throw std::runtime_error("plot: malformed report " + file + ": " + ex.what());
        }
    }
    if (series.empty()) throw std::runtime_error("plot: no data points found");

    const int Wpx = 640, Hpx = 420, mL = 70, mB = 50, mT = 30, mR = 160;
    double xmin = 1e300, xmax = -1e300, ymin = 0.0, ymax = 0.0;
    for (auto& [_, s] : series) {
        std::sort(s.pts.begin(), s.pts.end());
        for (auto& [x, y] : s.pts) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymax = std::max(ymax, y);
        }
    }
    if (xmax <= xmin) xmax = xmin + 1;
    ymax = std::max(1.0, ymax);
    auto X = [&](double x) { return mL + (x - xmin) / (xmax - xmin) * (Wpx - mL - mR); };
    auto Y = [&](double y) { return Hpx - mB - (y - ymin) / (ymax - ymin) * (Hpx - mB - mT); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                   "#8c564b"};
    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << Wpx << "' height='" << Hpx
        << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    svg << "<line x1='" << mL << "' y1='" << Hpx - mB << "' x2='" << Wpx - mR << "' y2='"
        << Hpx - mB << "' stroke='black'/>\n";
    svg << "<line x1='" << mL << "' y1='" << Hpx - mB << "' x2='" << mL << "' y2='" << mT
        << "' stroke='black'/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double y = ymin + (ymax - ymin) * i / 5.0;
        svg << "<text x='" << mL - 8 << "' y='" << Y(y) + 4
            << "' text-anchor='end' font-size='11'>" << std::fixed << std::setprecision(2) << y
            << "</text>\n";
        svg << "<line x1='" << mL - 4 << "' y1='" << Y(y) << "' x2='" << mL << "' y2='" << Y(y)
            << "' stroke='black'/>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        const double x = xmin + (xmax - xmin) * i / 4.0;
        svg << "<text x='" << X(x) << "' y='" << Hpx - mB + 18
            << "' text-anchor='middle' font-size='11'>" << std::setprecision(2) << x
            << "</text>\n";
    }
    svg << "<text x='" << (mL + Wpx - mR) / 2 << "' y='" << Hpx - 12
        << "' text-anchor='middle' font-size='12'>" << a.x_axis << "</text>\n";
    svg << "<text x='16' y='" << (mT + Hpx - mB) / 2 << "' font-size='12' transform='rotate(-90 16 "
        << (mT + Hpx - mB) / 2 << ")' text-anchor='middle'>" << a.metric << "</text>\n";

    int ci = 0;
    for (const auto& [_, s] : series) {
        const char* color = colors[ci % 6];
        svg << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
        for (const auto& [x, y] : s.pts) svg << X(x) << "," << Y(y) << " ";
        svg << "'/>\n";
        for (const auto& [x, y] : s.pts)
            svg << "<circle cx='" << X(x) << "' cy='" << Y(y) << "' r='3' fill='" << color
                << "'/>\n";
        svg << "<rect x='" << Wpx - mR + 12 << "' y='" << mT + 18 * ci << "' width='12' height='3' fill='"
            << color << "'/>\n";
        svg << "<text x='" << Wpx - mR + 30 << "' y='" << mT + 18 * ci + 5 << "' font-size='11'>"
            << s.label << "</text>\n";
        ++ci;
    }
    svg << "</svg>\n";

    std::ofstream f(a.out, std::ios::trunc);
    if (!f) throw std::runtime_error("plot: cannot write " + a.out);
    f << svg.str();
    std::cout << "wrote " << a.out << "\n";
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"stssl: semi-supervised spatio-temporal action detection toolkit"};
    app.require_subcommand(1);

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "generate a synthetic moving-shapes dataset");
    synth->add_option("--out", sa.out, "output dataset directory")->required();
    synth->add_option("--videos", sa.videos, "number of videos");
    synth->add_option("--classes", sa.classes, "number of motion classes (2-5)");
    synth->add_option("--frames", sa.frames, "frames per video");
    synth->add_option("--size", sa.size, "frame size WxH (default 64x64)");
    synth->add_option("--seed", sa.seed, "generator seed");
    synth->add_option("--untrimmed-frac", sa.untrimmed_frac, "fraction of untrimmed videos");
    synth->add_option("--val-frac", sa.val_frac, "validation hold-out fraction");
    synth->add_option("--mode", sa.mode, "annotation mode: box|mask");
    synth->add_option("--distractors", sa.distractors, "static decoy shapes per video");
    synth->add_flag("--force", sa.force, "overwrite a non-empty output directory");

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "train a detection model");
    train->add_option("--data", ta.data, "dataset root")->required();
    train->add_option("--out", ta.out, "run directory")->required();
    train->add_option("--mode", ta.mode,
                      "supervised|semi-cc|semi-lc|semi-var|semi-grad|semi-both");
    train->add_option("--labeled-frac", ta.labeled_frac, "labeled fraction of the train pool");
    train->add_option("--epochs", ta.epochs, "training epochs");
    train->add_option("--seed", ta.seed, "run seed");
    train->add_option("--config", ta.config_file, "JSON config file (flat dotted keys)");
    train->add_option("--set", ta.overrides, "config override key=value (repeatable)");
    train->add_option("--unlabeled-limit", ta.unlabeled_limit, "cap on unlabeled videos");
    train->add_flag("--resume", ta.resume, "resume from the run's last checkpoint");

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->add_option("--data", ea.data, "dataset root")->required();
    eval->add_option("--ckpt", ea.ckpt, "checkpoint directory (run/best or run/last)")->required();
    eval->add_option("--out", ea.out, "metrics report JSON path");
    eval->add_option("--split", ea.split, "val|train|all (default val)");
    eval->add_option("--threshold", ea.threshold, "localization binarization threshold");

    SweepArgs wa;
    auto* sweep = app.add_subcommand("sweep", "labeled-fraction / unlabeled-amount sweeps");
    sweep->add_option("--data", wa.data, "dataset root")->required();
    sweep->add_option("--out", wa.out, "sweep output directory")->required();
    sweep->add_option("--modes", wa.modes, "training modes")->delimiter(',');
    sweep->add_option("--fractions", wa.fractions, "labeled fractions")->delimiter(',');
    sweep->add_option("--seeds", wa.seeds, "seeds")->delimiter(',');
    sweep->add_option("--unlabeled-amounts", wa.unlabeled_amounts,
                      "unlabeled amounts as multiples of the labeled count")
        ->delimiter(',');
    sweep->add_option("--epochs", wa.epochs, "training epochs per run");
    sweep->add_option("--set", wa.overrides, "config override key=value (repeatable)");
    sweep->add_option("--jobs", wa.jobs, "concurrent runs");

    PlotArgs pa;
    auto* plot = app.add_subcommand("plot", "render sweep reports as SVG line plots");
    plot->add_option("--report", pa.reports, "sweep report JSON (repeatable)")->required();
    plot->add_option("--out", pa.out, "output SVG path");
    plot->add_option("--metric", pa.metric, "metric key (default v_map_0.5)");
    plot->add_option("--x", pa.x_axis, "x axis: fraction|amount");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return cmd_synth(sa);
        if (train->parsed()) return cmd_train(ta);
        if (eval->parsed()) return cmd_eval(ea);
        if (sweep->parsed()) return cmd_sweep(wa);
        if (plot->parsed()) return cmd_plot(pa);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace stssl::cli
