#include "catsketch/subspace.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace catsketch {

namespace {

constexpr const char* kMagic = "catsketch-subspace";
constexpr int kVersion = 1;

void check_row(const Subspace& U, int row) {
    if (row < 0 || row >= U.rows()) {
        throw std::out_of_range("row index " + std::to_string(row + 1) + " outside 1.." + std::to_string(U.rows()));
    }
}

}  // namespace

std::size_t Stream::entry_count() const {
    std::size_t n = 0;
    for (const auto& d : data) n += d.entries.size();
    return n;
}

void Stream::validate() const {
    std::vector<long> seen(static_cast<std::size_t>(dimension), -1);
    for (std::size_t k = 0; k < data.size(); ++k) {
        for (const Entry& e : data[k].entries) {
            if (e.row < 0 || e.row >= dimension) {
                throw std::invalid_argument("stream: row " + std::to_string(e.row + 1) + " out of range in datum " +
                                            std::to_string(data[k].t));
            }
            auto& last = seen[static_cast<std::size_t>(e.row)];
            if (last == static_cast<long>(k)) {
                throw std::invalid_argument("stream: duplicate row " + std::to_string(e.row + 1) + " in datum " +
                                            std::to_string(data[k].t));
            }
            last = static_cast<long>(k);
        }
    }
}

Subspace::Subspace(int rows, int dim, int blocks) : rows_(rows), dim_(dim) {
    if (rows < 1 || dim < 1 || blocks < 1) throw std::invalid_argument("subspace: dimensions must be positive");
    blocks_.assign(static_cast<std::size_t>(blocks), Mat::Zero(rows, dim));
}

ScoreVec Subspace::scores(int row, const Vec& psi) const {
    ScoreVec s(blocks());
    for (int k = 0; k < blocks(); ++k) s[k] = blocks_[static_cast<std::size_t>(k)].row(row).dot(psi);
    return s;
}

double Subspace::frobenius_sq() const {
    double s = 0.0;
    for (const Mat& b : blocks_) s += b.squaredNorm();
    return s;
}

double Subspace::frobenius() const { return std::sqrt(frobenius_sq()); }

bool Subspace::all_finite() const {
    for (const Mat& b : blocks_) {
        if (!b.allFinite()) return false;
    }
    return true;
}

Subspace& Subspace::operator-=(const Subspace& other) {
    if (other.rows_ != rows_ || other.dim_ != dim_ || other.blocks() != blocks()) {
        throw std::invalid_argument("subspace: shape mismatch");
    }
    for (int k = 0; k < blocks(); ++k) block(k) -= other.block(k);
    return *this;
}

Subspace init_subspace(int rows, int dim, std::uint64_t seed, int blocks) {
    if (dim > rows) throw std::invalid_argument("init_subspace: need D >= d");
    Subspace U(rows, dim, blocks);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < blocks; ++k) {
        Mat& b = U.block(k);
        for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = normal(rng);
    }
    return U;
}

double StepSchedule::at(long t) const {
    if (kind == Kind::Constant) {
        if (!(value >= 0.0)) throw std::invalid_argument("step schedule: step must be >= 0");
        return value;
    }
    if (!(value > 0.0)) throw std::invalid_argument("step schedule: c must be positive");
    return 1.0 / (value * static_cast<double>(t));
}

ScoreDerivs entry_score_derivs(const ModelSpec& model, const Subspace& U, const Entry& e, const Vec& psi) {
    check_row(U, e.row);
    const ScoreVec s = U.scores(e.row, psi);
    return score_derivs(model, e.value, {s.data(), static_cast<std::size_t>(s.size())});
}

Subspace subspace_grad(const ModelSpec& model, const Subspace& U, const PartialDatum& datum, const Vec& psi,
                       long t, double lambda) {
    Subspace g = U;
    const double shrink = lambda / static_cast<double>(t);
    for (int k = 0; k < g.blocks(); ++k) g.block(k) *= shrink;
    for (const Entry& e : datum.entries) {
        const ScoreDerivs sd = entry_score_derivs(model, U, e, psi);
        for (int k = 0; k < g.blocks(); ++k) g.block(k).row(e.row) -= sd.grad[k] * psi.transpose();
    }
    return g;
}

Subspace sgd_step(const Subspace& U, const PartialDatum& datum, const Vec& psi, long t, double lambda, double mu,
                  const ModelSpec& model) {
    if (t < 1) throw std::invalid_argument("sgd_step: t must be >= 1");
    const double keep = 1.0 - lambda * mu / static_cast<double>(t);
    Subspace next = U;
    for (int k = 0; k < next.blocks(); ++k) next.block(k) *= keep;
    // Derivatives read U (the frozen previous iterate) only.
    for (const Entry& e : datum.entries) {
        const ScoreDerivs sd = entry_score_derivs(model, U, e, psi);
        for (int k = 0; k < next.blocks(); ++k) {
            auto row = next.block(k).row(e.row);
            row += (mu * sd.grad[k]) * psi.transpose();
            if (!row.allFinite()) throw NumericalError("sgd_step", e.row + 1, "non-finite row");
        }
    }
    if (!next.all_finite()) {
        for (int i = 0; i < next.rows(); ++i) {
            for (int k = 0; k < next.blocks(); ++k) {
                if (!next.block(k).row(i).allFinite()) throw NumericalError("sgd_step", i + 1, "non-finite row");
            }
        }
    }
    return next;
}

Subspace project_ball(const Subspace& U, double bound) {
    if (!(bound > 0.0)) throw std::invalid_argument("project_ball: bound must be positive");
    const double norm = U.frobenius();
    if (norm <= bound) return U;
    Subspace out = U;
    const double scale = bound / norm;
    for (int k = 0; k < out.blocks(); ++k) out.block(k) *= scale;
    return out;
}

void P3Gradient::accumulate(const ModelSpec& model, const Subspace& U, const PartialDatum& datum, const Vec& psi) {
    if (count == 0 && data_grad.rows() == 0) data_grad = Subspace(U.rows(), U.dim(), U.blocks());
    for (const Entry& e : datum.entries) {
        const ScoreDerivs sd = entry_score_derivs(model, U, e, psi);
        for (int k = 0; k < U.blocks(); ++k) data_grad.block(k).row(e.row) -= sd.grad[k] * psi.transpose();
    }
    ++count;
}

void P3Gradient::merge(const P3Gradient& other) {
    if (other.count == 0) return;
    if (count == 0 && data_grad.rows() == 0) {
        *this = other;
        return;
    }
    for (int k = 0; k < data_grad.blocks(); ++k) data_grad.block(k) += other.data_grad.block(k);
    count += other.count;
}

double P3Gradient::norm(const Subspace& U, double lambda) const {
    if (count == 0) throw std::logic_error("P3Gradient: empty history");
    double s = 0.0;
    for (int k = 0; k < U.blocks(); ++k) s += (data_grad.block(k) + lambda * U.block(k)).squaredNorm();
    return std::sqrt(s) / static_cast<double>(count);
}

double grad_norm_P3(const ModelSpec& model, std::span<const PartialDatum> data, std::span<const Vec> sketches,
                    const Subspace& U, double lambda) {
    if (data.size() != sketches.size()) throw std::invalid_argument("grad_norm_P3: histories not aligned");
    P3Gradient acc;
    for (std::size_t k = 0; k < data.size(); ++k) acc.accumulate(model, U, data[k], sketches[k]);
    return acc.norm(U, lambda);
}

int count_gradient_bound_violations(const ModelSpec& model, const Subspace& U, const PartialDatum& datum,
                                    const Vec& psi, long t, double lambda) {
    const QuantizerSpec* q = model.quantizer();
    if (q == nullptr) return 0;
    const double delta1 = probit_smoothness(*q).delta1;
    const double shrink = lambda / static_cast<double>(t);
    int violations = 0;
    for (const Entry& e : datum.entries) {
        const auto u = U.matrix().row(e.row);
        const double d1 = entry_derivs(model, e.value, u.dot(psi)).d1;
        const double norm = (-d1 * psi.transpose() + shrink * u).norm();
        const double bound = delta1 * psi.norm() + shrink * u.norm();
        if (norm > bound * (1.0 + 1e-12) + 1e-300) ++violations;
    }
    return violations;
}

void write_checkpoint(std::ostream& out, const Checkpoint& cp) {
    out << kMagic << ' ' << kVersion << '\n';
    out << "model " << cp.model_tag << '\n';
    out << "rows " << cp.U.rows() << " dim " << cp.U.dim() << " blocks " << cp.U.blocks() << " t " << cp.t
        << " eta ";
    if (cp.has_eta) {
        out << std::setprecision(17) << cp.eta;
    } else {
        out << "nan";
    }
    out << '\n' << std::setprecision(17);
    for (int k = 0; k < cp.U.blocks(); ++k) {
        const Mat& b = cp.U.block(k);
        for (Eigen::Index i = 0; i < b.rows(); ++i) {
            for (Eigen::Index j = 0; j < b.cols(); ++j) out << (j ? " " : "") << b(i, j);
            out << '\n';
        }
    }
}

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    write_checkpoint(out, cp);
    if (!out) throw std::runtime_error("error writing checkpoint " + path);
}

Checkpoint read_checkpoint(std::istream& in) {
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != kMagic) throw std::runtime_error("checkpoint: bad header");
    if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    Checkpoint cp;
    std::string key;
    int rows = 0;
    int dim = 0;
    int blocks = 0;
    std::string eta;
    in >> key >> cp.model_tag;
    if (key != "model" || !is_known_model_tag(cp.model_tag)) throw std::runtime_error("checkpoint: bad model line");
    std::string k1, k2, k3, k4, k5;
    in >> k1 >> rows >> k2 >> dim >> k3 >> blocks >> k4 >> cp.t >> k5 >> eta;
    if (!in || k1 != "rows" || k2 != "dim" || k3 != "blocks" || k4 != "t" || k5 != "eta") {
        throw std::runtime_error("checkpoint: bad shape line");
    }
    cp.has_eta = eta != "nan";
    cp.eta = cp.has_eta ? std::stod(eta) : std::numeric_limits<double>::quiet_NaN();
    cp.U = Subspace(rows, dim, blocks);
    for (int k = 0; k < blocks; ++k) {
        Mat& b = cp.U.block(k);
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            if (!(in >> b.data()[i])) throw std::runtime_error("checkpoint: truncated matrix data");
        }
    }
    return cp;
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    return read_checkpoint(in);
}

}  // namespace catsketch
