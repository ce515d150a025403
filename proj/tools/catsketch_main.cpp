// catsketch command-line driver.
//
//   catsketch generate --config run.ini --out data/synth
//   catsketch train    --config run.ini --set train.mu=0.05 --set output.dir=runs/a
//   catsketch evaluate --run runs/a
//   catsketch impute   --run runs/a --out runs/a/imputed.csv
//   catsketch sweep    --config run.ini --p 0.1,0.3,0.5 --d 4,8 --threads 4
//
// A run directory holds config.ini (the effective configuration), trace.csv,
// sketches.csv, subspace.txt and metrics.json.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "catsketch/config.hpp"
#include "catsketch/data.hpp"
#include "catsketch/learner.hpp"
#include "catsketch/pipeline.hpp"
#include "catsketch/sketch.hpp"
#include "catsketch/subspace.hpp"

namespace fs = std::filesystem;
using namespace catsketch;

namespace {

constexpr const char* kConfigFile = "config.ini";
constexpr const char* kTraceFile = "trace.csv";
constexpr const char* kSketchFile = "sketches.csv";
constexpr const char* kCheckpointFile = "subspace.txt";
constexpr const char* kMetricsFile = "metrics.json";

struct CommonOptions {
    std::string config;
    std::vector<std::string> sets;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("-c,--config", o.config, "INI configuration file");
    cmd->add_option("-s,--set", o.sets, "override, e.g. train.mu=0.05 (repeatable)");
    cmd->add_option("-j,--threads", o.threads, "worker threads (sweep)");
}

RunConfig resolve(const CommonOptions& o) {
    RunConfig cfg = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
    for (const std::string& s : o.sets) cfg.set(s);
    if (o.threads > 0) cfg.train.threads = o.threads;
    cfg.validate();
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text << '\n';
}

Mat stack_rows(const std::vector<Vec>& rows) {
    if (rows.empty()) return Mat(0, 0);
    Mat m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t k = 0; k < rows.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();
    return m;
}

ModelSpec trained_model(const RunConfig& cfg, const Dataset& ds, const Checkpoint& cp) {
    ModelSpec model = build_model(cfg, ds);
    if (cp.has_eta) model = model.with_binary_threshold(cp.eta);
    if (model.tag() != cp.model_tag) {
        throw std::runtime_error("checkpoint model '" + cp.model_tag + "' does not match config model '" + model.tag() + "'");
    }
    return model;
}

// Rebuilds the online history from trace.csv (datum, cost, delta_u columns)
// and sketches.csv.
History load_history(const fs::path& dir, const Stream& train) {
    std::ifstream in(dir / kTraceFile);
    if (!in) throw std::runtime_error("missing " + (dir / kTraceFile).string());
    std::string line;
    std::getline(in, line);
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    const auto col = [&](const std::string& name) {
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] == name) return k;
        }
        throw std::runtime_error("trace.csv lacks column " + name);
    };
    const std::size_t c_datum = col("datum");
    const std::size_t c_cost = col("cost");
    const std::size_t c_du = col("delta_u");

    History h;
    const Mat sk = read_matrix_csv((dir / kSketchFile).string());
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) f.push_back(c);
        if (f.size() < cols.size()) throw std::runtime_error("trace.csv:" + std::to_string(lineno) + ": short row");
        // 1-based position in the training stream.
        const long datum = std::stol(f[c_datum]) - 1;
        if (datum < 0 || static_cast<std::size_t>(datum) >= train.size()) {
            throw std::runtime_error("trace.csv:" + std::to_string(lineno) + ": datum out of range");
        }
        h.data.push_back(train.data[static_cast<std::size_t>(datum)]);
        h.costs.push_back(std::stod(f[c_cost]));
        h.delta_u.push_back(std::stod(f[c_du]));
    }
    if (static_cast<std::size_t>(sk.rows()) != h.data.size()) {
        throw std::runtime_error("sketches.csv and trace.csv disagree on the number of steps");
    }
    for (Eigen::Index k = 0; k < sk.rows(); ++k) h.sketches.push_back(sk.row(k).transpose());
    return h;
}

void print_summary(const Metrics& m) {
    if (m.rmse) std::printf("rmse per-entry %.4f (T-normalized %.4f, %zu entries)\n", m.rmse->per_entry, m.rmse->paper, m.rmse->entries);
    if (m.impute_accuracy) std::printf("imputation accuracy %.4f\n", *m.impute_accuracy);
    if (m.classification_error) std::printf("classification error %.4f\n", *m.classification_error);
    if (m.regret) std::printf("regret %.6g (bound %.6g)\n", m.regret->regret, m.regret->bound);
    if (m.eta) std::printf("eta %.6f\n", *m.eta);
}

int cmd_generate(const CommonOptions& o, const std::string& out) {
    const RunConfig cfg = resolve(o);
    if (cfg.data.source != "synthetic" && cfg.data.source != "binary") {
        throw std::runtime_error("generate: data.source must be synthetic or binary");
    }
    const Dataset ds = prepare_dataset(cfg);
    const fs::path prefix(out);
    if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
    write_stream(prefix.string(), ds.train, ds.meta);
    if (ds.heldout.entry_count() > 0) write_stream(prefix.string() + "_heldout", ds.heldout, ds.meta);
    if (ds.truth) {
        write_matrix_csv(prefix.string() + "_basis.csv", ds.truth->basis);
        write_matrix_csv(prefix.string() + "_sketches.csv", ds.truth->sketches);
        Mat classes(static_cast<Eigen::Index>(ds.classes.size()), 1);
        for (std::size_t k = 0; k < ds.classes.size(); ++k) classes(static_cast<Eigen::Index>(k), 0) = ds.classes[k];
        write_matrix_csv(prefix.string() + "_classes.csv", classes);
    }
    std::printf("wrote %s.csv: D=%d T=%zu entries=%zu\n", prefix.string().c_str(), ds.train.dimension, ds.train.size(),
                ds.train.entry_count());
    return 0;
}

int cmd_train(const CommonOptions& o) {
    const RunConfig cfg = resolve(o);
    const fs::path dir(cfg.output.dir);
    fs::create_directories(dir);
    cfg.save((dir / kConfigFile).string());

    const Dataset ds = prepare_dataset(cfg);
    const RunOutput run = train_and_evaluate(cfg, ds);
    const OnlineLearner& L = run.learner;
    L.trace().write_csv((dir / kTraceFile).string());
    write_matrix_csv((dir / kSketchFile).string(), stack_rows(L.sketch_history()));
    Checkpoint cp{L.subspace(), L.model().tag(), L.t(), 0.0, false};
    if (const QuantizerSpec* q = L.model().quantizer(); q != nullptr && q->label_count() == 2) {
        cp.eta = q->thresholds[1];
        cp.has_eta = true;
    }
    save_checkpoint((dir / kCheckpointFile).string(), cp);
    write_text(dir / kMetricsFile, run.metrics.to_json());
    std::printf("trained %ld steps in %.2fs -> %s\n", L.t(), run.seconds, dir.string().c_str());
    print_summary(run.metrics);
    return 0;
}

int cmd_evaluate(const std::string& run_dir) {
    const fs::path dir(run_dir);
    const RunConfig cfg = RunConfig::load((dir / kConfigFile).string());
    const Dataset ds = prepare_dataset(cfg);
    const Checkpoint cp = load_checkpoint((dir / kCheckpointFile).string());
    const ModelSpec model = trained_model(cfg, ds, cp);
    const History h = load_history(dir, ds.train);
    const Metrics m = evaluate(cfg, ds, model, cp.U, &h);
    write_text(dir / kMetricsFile, m.to_json());
    print_summary(m);
    return 0;
}

int cmd_impute(const std::string& run_dir, const std::string& out) {
    const fs::path dir(run_dir);
    const RunConfig cfg = RunConfig::load((dir / kConfigFile).string());
    const Dataset ds = prepare_dataset(cfg);
    const Checkpoint cp = load_checkpoint((dir / kCheckpointFile).string());
    const ModelSpec model = trained_model(cfg, ds, cp);
    const std::vector<Vec> psi = resketch(model, ds.train, cp.U, cfg.train.lambda);
    Mat full(static_cast<Eigen::Index>(ds.train.size()), ds.train.dimension);
    for (std::size_t k = 0; k < ds.train.size(); ++k) {
        const std::vector<double> y = impute(model, ds.train.data[k], cp.U, psi[k]);
        for (int i = 0; i < ds.train.dimension; ++i) full(static_cast<Eigen::Index>(k), i) = y[static_cast<std::size_t>(i)];
    }
    const std::string path = out.empty() ? (dir / "imputed.csv").string() : out;
    write_matrix_csv(path, full);
    std::printf("wrote %s (%zu x %d)\n", path.c_str(), ds.train.size(), ds.train.dimension);
    return 0;
}

int cmd_sweep(const CommonOptions& o, const std::vector<double>& ps, const std::vector<int>& dims) {
    const RunConfig base = resolve(o);
    struct Job {
        double p;
        int d;
        nlohmann::json result;
    };
    std::vector<Job> jobs;
    for (const double p : ps) {
        for (const int d : dims) jobs.push_back({p, d, {}});
    }
    std::atomic<std::size_t> next{0};
    std::mutex io;
    const auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            Job& job = jobs[k];
            RunConfig cfg = base;
            cfg.data.p = job.p;
            cfg.train.dim = job.d;
            nlohmann::json r{{"p", job.p}, {"d", job.d}};
            try {
                cfg.validate();
                const Dataset ds = prepare_dataset(cfg);
                const RunOutput run = train_and_evaluate(cfg, ds);
                r["metrics"] = nlohmann::json::parse(run.metrics.to_json());
                r["seconds"] = run.seconds;
            } catch (const std::exception& e) {
                r["error"] = e.what();
            }
            job.result = std::move(r);
            const std::lock_guard<std::mutex> lock(io);
            std::printf("p=%.3f d=%d done\n", job.p, job.d);
            std::fflush(stdout);
        }
    };
    const int n = std::max(1, std::min<int>(base.train.threads, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    const fs::path dir(base.output.dir);
    fs::create_directories(dir);
    base.save((dir / kConfigFile).string());
    nlohmann::json all = nlohmann::json::array();
    for (const Job& j : jobs) all.push_back(j.result);
    write_text(dir / "sweep.json", all.dump(2));

    std::ofstream csv(dir / "sweep.csv");
    csv << "p,d,rmse_per_entry,classification_error,regret,seconds,error\n";
    for (const Job& j : jobs) {
        const nlohmann::json& r = j.result;
        const auto num = [](const nlohmann::json& v) { return v.is_number() ? std::to_string(v.get<double>()) : std::string(); };
        std::string rmse;
        std::string cls;
        std::string reg;
        if (r.contains("metrics")) {
            const nlohmann::json& m = r["metrics"];
            if (m.contains("rmse")) rmse = num(m["rmse"]["per_entry"]);
            if (m.contains("classification_error")) cls = num(m["classification_error"]);
            if (m.contains("regret")) reg = num(m["regret"]["regret"]);
        }
        csv << j.p << ',' << j.d << ',' << rmse << ',' << cls << ',' << reg << ','
            << (r.contains("seconds") ? num(r["seconds"]) : "") << ',' << (r.contains("error") ? r["error"].get<std::string>() : "")
            << '\n';
    }
    std::printf("wrote %s\n", (dir / "sweep.csv").string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online sketching of incomplete categorical data streams"};
    app.require_subcommand(1);

    CommonOptions gen_o;
    std::string gen_out = "data/synthetic";
    CLI::App* gen = app.add_subcommand("generate", "write a synthetic stream (synthetic or binary source)");
    add_common(gen, gen_o);
    gen->add_option("-o,--out", gen_out, "output prefix");

    CommonOptions train_o;
    CLI::App* train = app.add_subcommand("train", "train, then write trace, sketches, checkpoint and metrics");
    add_common(train, train_o);

    std::string eval_dir;
    CLI::App* eval = app.add_subcommand("evaluate", "recompute metrics for a saved run");
    eval->add_option("-r,--run", eval_dir, "run directory")->required();

    std::string imp_dir;
    std::string imp_out;
    CLI::App* imp = app.add_subcommand("impute", "write the imputed T x D matrix for a saved run");
    imp->add_option("-r,--run", imp_dir, "run directory")->required();
    imp->add_option("-o,--out", imp_out, "output CSV (default <run>/imputed.csv)");

    CommonOptions sweep_o;
    std::vector<double> sweep_p{0.1, 0.3, 0.5, 0.7};
    std::vector<int> sweep_d{8};
    CLI::App* sweep = app.add_subcommand("sweep", "grid over observation probability and subspace dimension");
    add_common(sweep, sweep_o);
    sweep->add_option("--p", sweep_p, "observation probabilities")->delimiter(',');
    sweep->add_option("--d", sweep_d, "subspace dimensions")->delimiter(',');

    CLI11_PARSE(app, argc, argv);
    try {
        if (gen->parsed()) return cmd_generate(gen_o, gen_out);
        if (train->parsed()) return cmd_train(train_o);
        if (eval->parsed()) return cmd_evaluate(eval_dir);
        if (imp->parsed()) return cmd_impute(imp_dir, imp_out);
        if (sweep->parsed()) return cmd_sweep(sweep_o, sweep_p, sweep_d);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "catsketch: %s\n", e.what());
        return 1;
    }
    return 0;
}
