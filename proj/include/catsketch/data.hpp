#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "catsketch/datum.hpp"
#include "catsketch/models.hpp"

namespace catsketch {

struct SyntheticSpec {
    int rows = 25;  // D
    long length = 5000;  // T
    int dim = 8;  // d
    int levels = 5;  // J
    double p = 1.0;
    double sigma = 1.0;
    double class_mean = 1.0;  // classes at -mean and +mean
    double class_variance = 0.04;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Everything the generator knew; T x D matrices indexed [t][i].
struct GroundTruth {
    Mat basis;  // D x d
    Mat sketches;  // T x d
    Mat noiseless;  // T x D, x = U psi
    Mat labels;  // T x D, before masking
    std::vector<int> classes;  // 0 or 1 per datum
    QuantizerSpec quantizer;
    double x_max = 0.0;
};

struct Generated {
    Stream stream;
    GroundTruth truth;
};

/// The J values ((-J + 1 + 2j) / (J - 1)) x_max, j = 0..J-1.
std::vector<double> uniform_grid(int levels, double x_max);

/// Quantizer with labels 1..J whose interior thresholds are the midpoints of
/// consecutive uniform_grid values.
QuantizerSpec uniform_quantizer(int levels, double x_max, double sigma);

/// Multilevel Probit stream: two equiprobable sketch classes, y = Q(x + v).
Generated gen_synthetic(const SyntheticSpec& spec);

/// Binary stream y = sign(u' psi + v - eta), sketches drawn as in gen_synthetic
/// (class_variance = 0 gives the fixed +-class_mean * 1 pair); labels -1 / +1.
Generated gen_binary_sign(const SyntheticSpec& spec, double eta = 0.0);

/// Keeps each entry independently with probability p.
Stream mask_random(const Stream& stream, double p, std::uint64_t seed);

struct Split {
    Stream train;
    Stream test;
};
/// Each entry goes to train with probability p and to test otherwise.
Split split_random(const Stream& stream, double p, std::uint64_t seed);

/// MovieLens-100K u.data: one datum per movie (item id order), rows are users.
Stream load_movielens(const std::string& path);

struct LabeledStream {
    Stream stream;
    std::vector<int> classes;
};

/// UCI kr-vs-kp: the 3-valued attribute is dropped and the remaining 35 map
/// to +-1 (see docs/chess-encoding.md). Class won -> 1, nowin -> 0.
LabeledStream load_chess(const std::string& path);

/// Stream metadata stored next to the CSV.
struct StreamMeta {
    int rows = 0;
    long length = 0;
    int levels = 0;
    std::string model = "probit";
    std::uint64_t seed = 0;
};

/// `<prefix>.csv` with header t,i,y (1-based) and `<prefix>.json` sidecar.
void write_stream(const std::string& prefix, const Stream& stream, const StreamMeta& meta);
Stream read_stream(const std::string& prefix, StreamMeta* meta = nullptr);

/// Dense T x D matrix written as CSV without header.
void write_matrix_csv(const std::string& path, const Mat& m);
Mat read_matrix_csv(const std::string& path);

}  // namespace catsketch
