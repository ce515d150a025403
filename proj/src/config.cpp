#include "catsketch/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <functional>
#include <type_traits>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

namespace catsketch {

namespace pt = boost::property_tree;

namespace {

std::string join(const std::vector<double>& v) {
    std::ostringstream s;
    s << std::setprecision(17);
    for (std::size_t k = 0; k < v.size(); ++k) s << (k ? "," : "") << v[k];
    return s.str();
}

std::vector<double> split_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

bool to_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw std::invalid_argument("not a boolean: " + v);
}

std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

// Every key as (section.key, getter, setter) over string values.
struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

template <class T>
Field field(std::string key, T RunConfig::*section, auto member) {
    using M = std::remove_reference_t<decltype(std::declval<T&>().*member)>;
    return {std::move(key),
            [section, member](const RunConfig& c) -> std::string {
                const M& v = (c.*section).*member;
                if constexpr (std::is_same_v<M, std::string>) {
                    return v;
                } else if constexpr (std::is_same_v<M, bool>) {
                    return v ? "true" : "false";
                } else if constexpr (std::is_same_v<M, std::vector<double>>) {
                    return join(v);
                } else if constexpr (std::is_floating_point_v<M>) {
                    return num(v);
                } else {
                    return std::to_string(v);
                }
            },
            [section, member](RunConfig& c, const std::string& s) {
                M& v = (c.*section).*member;
                if constexpr (std::is_same_v<M, std::string>) {
                    v = s;
                } else if constexpr (std::is_same_v<M, bool>) {
                    v = to_bool(s);
                } else if constexpr (std::is_same_v<M, std::vector<double>>) {
                    v = split_list(s);
                } else if constexpr (std::is_floating_point_v<M>) {
                    v = std::stod(s);
                } else if constexpr (std::is_same_v<M, std::uint64_t>) {
                    v = std::stoull(s);
                } else {
                    v = static_cast<M>(std::stol(s));
                }
            }};
}

const std::vector<Field>& fields() {
    using C = RunConfig;
    static const std::vector<Field> all = {
        field("model.type", &C::model, &C::Model::type),
        field("model.sigma", &C::model, &C::Model::sigma),
        field("model.thresholds", &C::model, &C::Model::thresholds),
        field("model.levels", &C::model, &C::Model::levels),
        field("model.lower", &C::model, &C::Model::lower),
        field("model.upper", &C::model, &C::Model::upper),
        field("model.collapsed", &C::model, &C::Model::collapsed),
        field("model.eta", &C::model, &C::Model::eta),
        field("data.source", &C::data, &C::Data::source),
        field("data.path", &C::data, &C::Data::path),
        field("data.rows", &C::data, &C::Data::rows),
        field("data.length", &C::data, &C::Data::length),
        field("data.true_dim", &C::data, &C::Data::true_dim),
        field("data.levels", &C::data, &C::Data::levels),
        field("data.p", &C::data, &C::Data::p),
        field("data.sigma", &C::data, &C::Data::sigma),
        field("data.true_eta", &C::data, &C::Data::true_eta),
        field("data.seed", &C::data, &C::Data::seed),
        field("data.train_fraction", &C::data, &C::Data::train_fraction),
        field("data.split_seed", &C::data, &C::Data::split_seed),
        field("train.dim", &C::train, &C::Train::dim),
        field("train.lambda", &C::train, &C::Train::lambda),
        field("train.schedule", &C::train, &C::Train::schedule),
        field("train.mu", &C::train, &C::Train::mu),
        field("train.c", &C::train, &C::Train::c),
        field("train.method", &C::train, &C::Train::method),
        field("train.inner_iters", &C::train, &C::Train::inner_iters),
        field("train.betas", &C::train, &C::Train::betas),
        field("train.tol", &C::train, &C::Train::tol),
        field("train.passes", &C::train, &C::Train::passes),
        field("train.seed", &C::train, &C::Train::seed),
        field("train.shuffle_seed", &C::train, &C::Train::shuffle_seed),
        field("train.ball", &C::train, &C::Train::ball),
        field("train.adapt_threshold", &C::train, &C::Train::adapt_threshold),
        field("train.gamma", &C::train, &C::Train::gamma),
        field("train.threshold_form", &C::train, &C::Train::threshold_form),
        field("train.grad_trace_every", &C::train, &C::Train::grad_trace_every),
        field("train.check_bounds", &C::train, &C::Train::check_bounds),
        field("train.threads", &C::train, &C::Train::threads),
        field("output.dir", &C::output, &C::Output::dir),
    };
    return all;
}

const Field& find_field(const std::string& key) {
    for (const Field& f : fields()) {
        if (f.key == key) return f;
    }
    throw std::invalid_argument("unknown config key '" + key + "'");
}

void assign(RunConfig& c, const std::string& key, const std::string& value) {
    try {
        find_field(key).set(c, value);
    } catch (const std::invalid_argument& e) {
        if (std::string(e.what()).rfind("unknown config key", 0) == 0) throw;
        throw std::invalid_argument("bad value for " + key + ": '" + value + "'");
    }
}

}  // namespace

RunConfig RunConfig::parse(std::istream& in) {
    pt::ptree tree;
    pt::read_ini(in, tree);
    RunConfig c;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw std::invalid_argument("config key '" + section + "' outside a section");
        }
        for (const auto& [key, value] : body) assign(c, section + "." + key, value.data());
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    try {
        return parse(in);
    } catch (const pt::ini_parser_error& e) {
        throw std::runtime_error(path + ": " + e.message());
    }
}

void RunConfig::set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected section.key=value, got '" + assignment + "'");
    assign(*this, assignment.substr(0, eq), assignment.substr(eq + 1));
}

void RunConfig::validate() const {
    static const std::set<std::string> sources = {"synthetic", "binary", "movielens", "chess", "stream"};
    if (!is_known_model_tag(model.type)) throw std::invalid_argument("model.type: unknown model " + model.type);
    if (!sources.count(data.source)) throw std::invalid_argument("data.source: unknown source " + data.source);
    if (!(model.sigma > 0.0)) throw std::invalid_argument("model.sigma must be positive");
    if (data.source != "synthetic" && data.source != "binary" && data.path.empty()) {
        throw std::invalid_argument("data.path is required for source " + data.source);
    }
    if (!(data.p > 0.0 && data.p <= 1.0)) throw std::invalid_argument("data.p must lie in (0, 1]");
    if (!(data.train_fraction > 0.0 && data.train_fraction <= 1.0)) {
        throw std::invalid_argument("data.train_fraction must lie in (0, 1]");
    }
    if (train.dim < 1) throw std::invalid_argument("train.dim must be >= 1");
    if (!(train.lambda >= 0.0)) throw std::invalid_argument("train.lambda must be >= 0");
    if (train.schedule != "constant" && train.schedule != "inverse") {
        throw std::invalid_argument("train.schedule must be constant or inverse");
    }
    if (train.method != "newton" && train.method != "gd") throw std::invalid_argument("train.method must be newton or gd");
    if (train.threshold_form != "exact" && train.threshold_form != "literal") {
        throw std::invalid_argument("train.threshold_form must be exact or literal");
    }
    if (train.passes < 1) throw std::invalid_argument("train.passes must be >= 1");
    if (train.threads < 1) throw std::invalid_argument("train.threads must be >= 1");
    if (!(train.mu >= 0.0)) throw std::invalid_argument("train.mu must be >= 0");
    if (!(train.c > 0.0)) throw std::invalid_argument("train.c must be positive");
}

void RunConfig::write(std::ostream& out) const {
    std::string current;
    for (const Field& f : fields()) {
        const auto dot = f.key.find('.');
        const std::string section = f.key.substr(0, dot);
        if (section != current) {
            out << (current.empty() ? "" : "\n") << '[' << section << "]\n";
            current = section;
        }
        out << f.key.substr(dot + 1) << " = " << f.get(*this) << '\n';
    }
}

void RunConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write(out);
}

LearnerConfig RunConfig::learner() const {
    LearnerConfig lc;
    lc.dim = train.dim;
    lc.lambda = train.lambda;
    // mu = 0 freezes U; the schedule itself requires a positive value.
    lc.mu = train.schedule == "inverse" ? StepSchedule::inverse_time(train.c) : StepSchedule::constant(train.mu);
    lc.inner.method = train.method == "gd" ? InnerSolverConfig::Method::GD : InnerSolverConfig::Method::Newton;
    lc.inner.max_iters = train.inner_iters;
    lc.inner.betas = train.betas;
    lc.inner.tol = train.tol;
    lc.inner.lambda = train.lambda;
    lc.passes = train.passes;
    lc.init_seed = train.seed;
    lc.shuffle_seed = train.shuffle_seed;
    lc.ball = train.ball;
    lc.adapt_threshold = train.adapt_threshold;
    lc.gamma = StepSchedule::constant(train.gamma);
    lc.threshold_form = train.threshold_form == "literal" ? ThresholdGradForm::Literal : ThresholdGradForm::Exact;
    lc.grad_trace_every = train.grad_trace_every;
    lc.check_bounds = train.check_bounds;
    return lc;
}

}  // namespace catsketch
