#include "catsketch/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace catsketch {

namespace {

[[noreturn]] void parse_error(const std::string& path, long line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

Mat draw_basis(int rows, int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Mat U(rows, dim);
    for (Eigen::Index k = 0; k < U.size(); ++k) U.data()[k] = normal(rng);
    return U;
}

// Stream with every entry of `labels`, then masked with probability p.
Stream dense_stream(const Mat& labels, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution keep(p);
    Stream s;
    s.dimension = static_cast<int>(labels.cols());
    s.data.resize(static_cast<std::size_t>(labels.rows()));
    for (Eigen::Index t = 0; t < labels.rows(); ++t) {
        PartialDatum& d = s.data[static_cast<std::size_t>(t)];
        d.t = t + 1;
        for (Eigen::Index i = 0; i < labels.cols(); ++i) {
            if (p >= 1.0 || keep(rng)) d.entries.push_back({static_cast<int>(i), labels(t, i)});
        }
    }
    return s;
}

// Chess attribute tokens, 1-based column -> (token for +1, token for -1).
// Column 15 is the three-valued one and is skipped.
constexpr int kChessColumns = 36;
constexpr int kChessDropped = 15;

std::pair<char, char> chess_tokens(int column) {
    if (column == 13) return {'g', 'l'};
    if (column == 36) return {'t', 'n'};
    return {'t', 'f'};
}

}  // namespace

void SyntheticSpec::validate() const {
    if (dim < 1 || dim > rows) throw std::invalid_argument("synthetic: need 1 <= d <= D");
    if (length < 1) throw std::invalid_argument("synthetic: need T >= 1");
    if (levels < 2) throw std::invalid_argument("synthetic: need J >= 2");
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("synthetic: need 0 < p <= 1");
    if (!(sigma >= 0.0)) throw std::invalid_argument("synthetic: need sigma >= 0");
    if (!(class_variance >= 0.0)) throw std::invalid_argument("synthetic: need class variance >= 0");
}

std::vector<double> uniform_grid(int levels, double x_max) {
    std::vector<double> g(static_cast<std::size_t>(levels));
    for (int j = 0; j < levels; ++j) {
        g[static_cast<std::size_t>(j)] = static_cast<double>(-levels + 1 + 2 * j) / (levels - 1) * x_max;
    }
    return g;
}

QuantizerSpec uniform_quantizer(int levels, double x_max, double sigma) {
    if (!(x_max > 0.0)) throw std::invalid_argument("uniform_quantizer: x_max must be positive");
    const std::vector<double> grid = uniform_grid(levels, x_max);
    std::vector<double> interior;
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) interior.push_back(0.5 * (grid[j] + grid[j + 1]));
    std::vector<double> labels(static_cast<std::size_t>(levels));
    for (int j = 0; j < levels; ++j) labels[static_cast<std::size_t>(j)] = j + 1;
    return QuantizerSpec::from_interior(std::move(labels), interior, sigma);
}

Generated gen_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    const double sd = std::sqrt(spec.class_variance);

    Generated g;
    GroundTruth& gt = g.truth;
    gt.basis = draw_basis(spec.rows, spec.dim, rng);
    gt.sketches.resize(spec.length, spec.dim);
    gt.classes.resize(static_cast<std::size_t>(spec.length));
    for (long t = 0; t < spec.length; ++t) {
        const int c = coin(rng) ? 1 : 0;
        gt.classes[static_cast<std::size_t>(t)] = c;
        const double mean = c == 1 ? spec.class_mean : -spec.class_mean;
        for (int k = 0; k < spec.dim; ++k) gt.sketches(t, k) = mean + sd * normal(rng);
    }
    gt.noiseless = gt.sketches * gt.basis.transpose();
    gt.x_max = gt.noiseless.cwiseAbs().maxCoeff();
    gt.quantizer = uniform_quantizer(spec.levels, gt.x_max, spec.sigma > 0.0 ? spec.sigma : 1.0);
    const ModelSpec model(Probit{gt.quantizer});

    gt.labels.resize(spec.length, spec.rows);
    for (long t = 0; t < spec.length; ++t) {
        for (int i = 0; i < spec.rows; ++i) {
            gt.labels(t, i) = forward_map(model, gt.noiseless(t, i) + spec.sigma * normal(rng));
        }
    }
    g.stream = dense_stream(gt.labels, spec.p, rng);
    return g;
}

Generated gen_binary_sign(const SyntheticSpec& spec, double eta) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    Generated g;
    GroundTruth& gt = g.truth;
    gt.basis = draw_basis(spec.rows, spec.dim, rng);
    gt.sketches.resize(spec.length, spec.dim);
    gt.classes.resize(static_cast<std::size_t>(spec.length));
    const double sd = std::sqrt(spec.class_variance);
    for (long t = 0; t < spec.length; ++t) {
        const int c = coin(rng) ? 1 : 0;
        gt.classes[static_cast<std::size_t>(t)] = c;
        const double mean = c == 1 ? spec.class_mean : -spec.class_mean;
        for (int k = 0; k < spec.dim; ++k) gt.sketches(t, k) = mean + (sd > 0.0 ? sd * normal(rng) : 0.0);
    }
    gt.noiseless = gt.sketches * gt.basis.transpose();
    gt.x_max = gt.noiseless.cwiseAbs().maxCoeff();
    const double cut[] = {eta};
    gt.quantizer = QuantizerSpec::from_interior({-1.0, 1.0}, cut, spec.sigma > 0.0 ? spec.sigma : 1.0);

    gt.labels.resize(spec.length, spec.rows);
    for (long t = 0; t < spec.length; ++t) {
        for (int i = 0; i < spec.rows; ++i) {
            gt.labels(t, i) = gt.noiseless(t, i) + spec.sigma * normal(rng) - eta > 0.0 ? 1.0 : -1.0;
        }
    }
    g.stream = dense_stream(gt.labels, spec.p, rng);
    return g;
}

Stream mask_random(const Stream& stream, double p, std::uint64_t seed) {
    return split_random(stream, p, seed).train;
}

Split split_random(const Stream& stream, double p, std::uint64_t seed) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("split: need 0 < p <= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Split s;
    s.train.dimension = s.test.dimension = stream.dimension;
    for (const PartialDatum& d : stream.data) {
        PartialDatum a{d.t, {}};
        PartialDatum b{d.t, {}};
        for (const Entry& e : d.entries) {
            // One draw per entry keeps the split stable when p changes.
            (unit(rng) < p ? a : b).entries.push_back(e);
        }
        s.train.data.push_back(std::move(a));
        s.test.data.push_back(std::move(b));
    }
    return s;
}

Stream load_movielens(const std::string& path) {
    std::ifstream in = open_in(path);
    std::map<int, std::vector<Entry>> items;
    int users = 0;
    std::string line;
    long n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        std::istringstream ls(line);
        long user = 0;
        long item = 0;
        double rating = 0.0;
        long stamp = 0;
        if (!(ls >> user >> item >> rating >> stamp)) parse_error(path, n, "expected user item rating timestamp");
        if (user < 1 || item < 1) parse_error(path, n, "ids must be positive");
        if (rating != std::floor(rating) || rating < 1.0 || rating > 5.0) {
            throw std::domain_error(path + ":" + std::to_string(n) + ": rating outside 1..5");
        }
        items[static_cast<int>(item)].push_back({static_cast<int>(user - 1), rating});
        users = std::max(users, static_cast<int>(user));
    }
    Stream s;
    s.dimension = users;
    const int last = items.empty() ? 0 : items.rbegin()->first;
    s.data.resize(static_cast<std::size_t>(last));
    for (int t = 0; t < last; ++t) s.data[static_cast<std::size_t>(t)].t = t + 1;
    for (auto& [item, entries] : items) {
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.row < b.row; });
        s.data[static_cast<std::size_t>(item - 1)].entries = std::move(entries);
    }
    s.validate();
    return s;
}

LabeledStream load_chess(const std::string& path) {
    std::ifstream in = open_in(path);
    LabeledStream out;
    out.stream.dimension = kChessColumns - 1;
    std::string line;
    long n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> tok;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) tok.push_back(field);
        if (tok.size() != kChessColumns + 1) parse_error(path, n, "expected 37 fields");
        PartialDatum d;
        d.t = static_cast<long>(out.stream.data.size()) + 1;
        int row = 0;
        for (int c = 1; c <= kChessColumns; ++c) {
            const std::string& v = tok[static_cast<std::size_t>(c - 1)];
            if (c == kChessDropped) {
                if (v != "b" && v != "n" && v != "w") parse_error(path, n, "unknown token '" + v + "'");
                continue;
            }
            const auto [plus, minus] = chess_tokens(c);
            if (v.size() != 1 || (v[0] != plus && v[0] != minus)) {
                parse_error(path, n, "unknown token '" + v + "' in attribute " + std::to_string(c));
            }
            d.entries.push_back({row++, v[0] == plus ? 1.0 : -1.0});
        }
        const std::string& cls = tok.back();
        if (cls != "won" && cls != "nowin") parse_error(path, n, "unknown class '" + cls + "'");
        out.classes.push_back(cls == "won" ? 1 : 0);
        out.stream.data.push_back(std::move(d));
    }
    return out;
}

void write_stream(const std::string& prefix, const Stream& stream, const StreamMeta& meta) {
    std::ofstream csv = open_out(prefix + ".csv");
    csv << "t,i,y\n" << std::setprecision(17);
    for (const PartialDatum& d : stream.data) {
        for (const Entry& e : d.entries) csv << d.t << ',' << e.row + 1 << ',' << e.value << '\n';
    }
    nlohmann::ordered_json j;
    j["D"] = stream.dimension;
    j["T"] = static_cast<long>(stream.data.size());
    j["J"] = meta.levels;
    j["model"] = meta.model;
    j["seed"] = meta.seed;
    open_out(prefix + ".json") << j.dump(2) << '\n';
}

Stream read_stream(const std::string& prefix, StreamMeta* meta) {
    nlohmann::json j;
    open_in(prefix + ".json") >> j;
    Stream s;
    s.dimension = j.at("D").get<int>();
    const long length = j.at("T").get<long>();
    if (meta != nullptr) {
        meta->rows = s.dimension;
        meta->length = length;
        meta->levels = j.value("J", 0);
        meta->model = j.value("model", std::string("probit"));
        meta->seed = j.value("seed", std::uint64_t{0});
    }
    s.data.resize(static_cast<std::size_t>(length));
    for (long t = 0; t < length; ++t) s.data[static_cast<std::size_t>(t)].t = t + 1;

    const std::string path = prefix + ".csv";
    std::ifstream in = open_in(path);
    std::string line;
    std::getline(in, line);
    if (line != "t,i,y") parse_error(path, 1, "expected header t,i,y");
    long n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        long t = 0;
        long i = 0;
        double y = 0.0;
        char c1 = 0;
        char c2 = 0;
        std::istringstream ls(line);
        if (!(ls >> t >> c1 >> i >> c2 >> y) || c1 != ',' || c2 != ',') parse_error(path, n, "expected t,i,y");
        if (t < 1 || t > length) parse_error(path, n, "t out of range");
        s.data[static_cast<std::size_t>(t - 1)].entries.push_back({static_cast<int>(i - 1), y});
    }
    s.validate();
    return s;
}

void write_matrix_csv(const std::string& path, const Mat& m) {
    std::ofstream out = open_out(path);
    out << std::setprecision(17);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
        out << '\n';
    }
}

Mat read_matrix_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> r;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) r.push_back(std::stod(f));
        if (!rows.empty() && r.size() != rows.front().size()) {
            parse_error(path, static_cast<long>(rows.size()) + 1, "ragged row");
        }
        rows.push_back(std::move(r));
    }
    Mat m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return m;
}

}  // namespace catsketch
