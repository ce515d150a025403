#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "catsketch/learner.hpp"

namespace catsketch {

/// Run configuration, read from an INI file with sections [model], [data],
/// [train] and [output]. Unset keys keep the defaults below.
struct RunConfig {
    struct Model {
        std::string type = "probit";  // probit | tobit1 | tobit2 | logit | logit_multi
        double sigma = 1.0;
        /// Probit interior thresholds; empty means "from the data source".
        std::vector<double> thresholds;
        std::vector<double> levels;
        double lower = -1.0;
        double upper = 1.0;
        double collapsed = 0.0;
        /// Binary Probit threshold (binary source / chess).
        double eta = 0.0;
    } model;

    struct Data {
        std::string source = "synthetic";  // synthetic | binary | movielens | chess | stream
        std::string path;
        int rows = 25;
        long length = 5000;
        int true_dim = 8;
        int levels = 5;
        double p = 1.0;
        double sigma = 1.0;
        double true_eta = 0.0;
        std::uint64_t seed = 1;
        /// Real data: fraction kept for training, rest held out.
        double train_fraction = 1.0;
        std::uint64_t split_seed = 3;
    } data;

    struct Train {
        int dim = 8;
        double lambda = 0.1;
        std::string schedule = "constant";  // constant | inverse
        double mu = 0.01;
        double c = 1.0;
        std::string method = "newton";  // newton | gd
        int inner_iters = 5;
        std::vector<double> betas{1.0};
        double tol = 1e-6;
        int passes = 1;
        std::uint64_t seed = 1;
        std::uint64_t shuffle_seed = 2;
        double ball = 0.0;
        bool adapt_threshold = false;
        double gamma = 0.01;
        std::string threshold_form = "exact";  // exact | literal
        int grad_trace_every = 0;
        bool check_bounds = false;
        int threads = 1;
    } train;

    struct Output {
        std::string dir = "out";
    } output;

    /// Reads an INI file; unknown keys are rejected.
    static RunConfig load(const std::string& path);
    static RunConfig parse(std::istream& in);
    /// Applies "section.key=value".
    void set(const std::string& assignment);
    void validate() const;

    void write(std::ostream& out) const;
    void save(const std::string& path) const;

    LearnerConfig learner() const;
};

}  // namespace catsketch
