#include "catsketch/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace catsketch {

namespace {

// Masked entries of a generated stream, with their true labels.
Stream complement(const Stream& kept, const Mat& labels) {
    Stream out;
    out.dimension = kept.dimension;
    std::vector<char> seen(static_cast<std::size_t>(kept.dimension));
    for (const PartialDatum& d : kept.data) {
        std::fill(seen.begin(), seen.end(), 0);
        for (const Entry& e : d.entries) seen[static_cast<std::size_t>(e.row)] = 1;
        PartialDatum m{d.t, {}};
        for (int i = 0; i < kept.dimension; ++i) {
            if (!seen[static_cast<std::size_t>(i)]) m.entries.push_back({i, labels(d.t - 1, i)});
        }
        out.data.push_back(std::move(m));
    }
    return out;
}

std::vector<double> range_levels(int first, int count) {
    std::vector<double> v(static_cast<std::size_t>(count));
    std::iota(v.begin(), v.end(), static_cast<double>(first));
    return v;
}

nlohmann::ordered_json regret_json(const RegretReport& r) {
    return {{"c_bar", r.c_bar}, {"c_hat", r.c_hat}, {"regret", r.regret}, {"T", r.length},
            {"b_hat", r.b_hat}, {"mu", std::isnan(r.mu) ? nlohmann::ordered_json() : nlohmann::ordered_json(r.mu)},
            {"bound", std::isnan(r.bound) ? nlohmann::ordered_json() : nlohmann::ordered_json(r.bound)}};
}

}  // namespace

Dataset prepare_dataset(const RunConfig& cfg) {
    cfg.validate();
    Dataset ds;
    const auto& dc = cfg.data;
    if (dc.source == "synthetic" || dc.source == "binary") {
        SyntheticSpec spec;
        spec.rows = dc.rows;
        spec.length = dc.length;
        spec.dim = dc.true_dim;
        spec.levels = dc.levels;
        spec.p = dc.p;
        spec.sigma = dc.sigma;
        spec.seed = dc.seed;
        Generated g = dc.source == "synthetic" ? gen_synthetic(spec) : gen_binary_sign(spec, dc.true_eta);
        ds.train = std::move(g.stream);
        ds.heldout = complement(ds.train, g.truth.labels);
        ds.classes = g.truth.classes;
        ds.source_quantizer = g.truth.quantizer;
        ds.meta.levels = dc.source == "synthetic" ? dc.levels : 2;
        ds.truth = std::move(g.truth);
    } else {
        Stream full;
        if (dc.source == "movielens") {
            full = load_movielens(dc.path);
            ds.meta.levels = 5;
        } else if (dc.source == "chess") {
            LabeledStream ls = load_chess(dc.path);
            full = std::move(ls.stream);
            ds.classes = std::move(ls.classes);
            ds.meta.levels = 2;
        } else {
            full = read_stream(dc.path, &ds.meta);
        }
        if (dc.train_fraction < 1.0) {
            Split s = split_random(full, dc.train_fraction, dc.split_seed);
            ds.train = std::move(s.train);
            ds.heldout = std::move(s.test);
        } else {
            ds.train = std::move(full);
            ds.heldout.dimension = ds.train.dimension;
            ds.heldout.data.resize(ds.train.size());
            for (std::size_t k = 0; k < ds.train.size(); ++k) ds.heldout.data[k].t = ds.train.data[k].t;
        }
    }
    ds.meta.rows = ds.train.dimension;
    ds.meta.length = static_cast<long>(ds.train.size());
    ds.meta.model = cfg.model.type;
    ds.meta.seed = dc.seed;
    return ds;
}

ModelSpec build_model(const RunConfig& cfg, const Dataset& data) {
    const auto& m = cfg.model;
    if (m.type == "tobit1") return ModelSpec(TobitI{m.lower, m.upper, m.sigma});
    if (m.type == "tobit2") return ModelSpec(TobitII{m.lower, m.upper, m.collapsed, m.sigma});
    if (m.type == "logit") return ModelSpec(LogitBinary{});
    const bool binary_source = cfg.data.source == "binary" || cfg.data.source == "chess";
    if (m.type == "logit_multi") {
        if (!m.levels.empty()) return ModelSpec(LogitMulti{m.levels});
        return ModelSpec(LogitMulti{range_levels(1, std::max(2, data.meta.levels))});
    }
    // probit
    if (binary_source && m.thresholds.empty()) return ModelSpec::binary_probit(m.eta, m.sigma);
    if (!m.thresholds.empty()) {
        std::vector<double> levels = m.levels;
        if (levels.empty()) {
            levels = m.thresholds.size() == 1 ? std::vector<double>{-1.0, 1.0}
                                              : range_levels(1, static_cast<int>(m.thresholds.size()) + 1);
        }
        return ModelSpec(Probit{QuantizerSpec::from_interior(levels, m.thresholds, m.sigma)});
    }
    if (data.source_quantizer) {
        QuantizerSpec q = *data.source_quantizer;
        q.sigma = m.sigma;
        return ModelSpec(Probit{q});
    }
    if (cfg.data.source == "movielens") {
        const double cuts[] = {1.5, 2.5, 3.5, 4.5};
        return ModelSpec(Probit{QuantizerSpec::from_interior(range_levels(1, 5), cuts, m.sigma)});
    }
    throw std::invalid_argument("probit model needs model.thresholds for this data source");
}

History history_of(const OnlineLearner& learner) {
    History h;
    h.data = learner.data_history();
    h.sketches = learner.sketch_history();
    h.costs = learner.online_costs();
    for (const TraceRecord& r : learner.trace().records) h.delta_u.push_back(r.delta_u);
    return h;
}

std::string Metrics::to_json() const {
    nlohmann::ordered_json j;
    if (regret) j["regret"] = regret_json(*regret);
    if (rmse) {
        j["rmse"] = {{"paper", rmse->paper}, {"per_entry", rmse->per_entry}, {"entries", rmse->entries},
                     {"T", rmse->length}};
    }
    if (impute_accuracy) j["impute_accuracy"] = *impute_accuracy;
    if (classification_error) j["classification_error"] = *classification_error;
    if (eta) j["eta"] = *eta;
    if (grad_norm_p3) j["grad_norm_p3"] = *grad_norm_p3;
    j["subspace_frobenius"] = final_frobenius;
    return j.dump(2);
}

Metrics evaluate(const RunConfig& cfg, const Dataset& data, const ModelSpec& model, const Subspace& U,
                 const History* history, double ridge) {
    Metrics m;
    const double lambda = cfg.train.lambda;
    m.final_frobenius = U.frobenius();
    if (const QuantizerSpec* q = model.quantizer(); q != nullptr && q->label_count() == 2) m.eta = q->thresholds[1];

    if (history != nullptr && !history->data.empty()) {
        RegretReport r = cumulative_costs(model, history->data, history->sketches, history->costs, U, lambda);
        for (std::size_t k = 0; k < history->delta_u.size(); ++k) {
            r.b_hat = std::max(r.b_hat, static_cast<double>(k + 1) * history->delta_u[k]);
        }
        r.mu = cfg.train.schedule == "constant" ? cfg.train.mu : std::nan("");
        r.bound = regret_bound(r.b_hat, r.mu, r.length);
        m.regret = r;
        m.grad_norm_p3 = grad_norm_P3(model, history->data, history->sketches, U, lambda);
    }

    const std::vector<Vec> sketches = resketch(model, data.train, U, lambda);
    if (data.heldout.entry_count() > 0) {
        std::vector<std::vector<double>> pred;
        pred.reserve(data.train.size());
        for (std::size_t k = 0; k < data.train.size(); ++k) pred.push_back(impute(model, data.train.data[k], U, sketches[k]));
        m.rmse = rmse(data.heldout, pred);
        if (!std::holds_alternative<TobitI>(model.variant()) && !std::holds_alternative<TobitII>(model.variant())) {
            std::size_t hit = 0;
            for (std::size_t k = 0; k < data.heldout.size(); ++k) {
                for (const Entry& e : data.heldout.data[k].entries) {
                    if (pred[k][static_cast<std::size_t>(e.row)] == e.value) ++hit;
                }
            }
            m.impute_accuracy = static_cast<double>(hit) / static_cast<double>(m.rmse->entries);
        }
    }

    if (!data.classes.empty()) {
        std::vector<std::size_t> order(sketches.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(cfg.data.split_seed);
        std::shuffle(order.begin(), order.end(), rng);
        const std::size_t half = order.size() / 2;
        std::vector<Vec> tr;
        std::vector<Vec> te;
        std::vector<int> ltr;
        std::vector<int> lte;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const std::size_t j = order[k];
            (k < half ? tr : te).push_back(sketches[j]);
            (k < half ? ltr : lte).push_back(data.classes[j]);
        }
        m.classification_error = ls_classify(stack(tr), ltr, stack(te), lte, ridge).error;
    }
    return m;
}

RunOutput train_and_evaluate(const RunConfig& cfg, const Dataset& data) {
    const ModelSpec model = build_model(cfg, data);
    const auto start = std::chrono::steady_clock::now();
    OnlineLearner learner(model, data.train.dimension, cfg.learner());
    learner.run(data.train);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const History h = history_of(learner);
    Metrics metrics = evaluate(cfg, data, learner.model(), learner.subspace(), &h);
    return {std::move(learner), std::move(metrics), seconds};
}

}  // namespace catsketch
