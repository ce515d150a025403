#include <doctest.h>

#include <sstream>

#include "catsketch/config.hpp"

using namespace catsketch;

TEST_CASE("defaults follow the synthetic protocol") {
    const RunConfig c;
    CHECK(c.train.lambda == 0.1);
    CHECK(c.train.mu == 0.01);
    CHECK(c.data.levels == 5);
    CHECK(c.train.dim == 8);
    const LearnerConfig lc = c.learner();
    CHECK(lc.inner.max_iters == 5);
    CHECK(lc.inner.tol == 1e-6);
}

TEST_CASE("parse, override and round trip") {
    std::istringstream in(
        "[model]\ntype = probit\nsigma = 0.5\nthresholds = -1, 0, 1\n"
        "[data]\nsource = synthetic\np = 0.75\n"
        "[train]\nschedule = inverse\nc = 0.5\nadapt_threshold = false\nbetas = 1,0.5\n");
    RunConfig c = RunConfig::parse(in);
    CHECK(c.model.sigma == 0.5);
    CHECK(c.model.thresholds == std::vector<double>{-1, 0, 1});
    CHECK(c.data.p == 0.75);
    CHECK(c.learner().mu.kind == StepSchedule::Kind::InverseTime);
    CHECK(c.train.betas == std::vector<double>{1.0, 0.5});
    c.set("train.dim=3");
    c.set("output.dir=/tmp/x");
    CHECK(c.train.dim == 3);
    CHECK_THROWS(c.set("train.nope=1"));
    CHECK_THROWS(c.set("train.dim"));
    CHECK_THROWS(c.set("train.adapt_threshold=maybe"));

    std::stringstream out;
    c.write(out);
    const RunConfig back = RunConfig::parse(out);
    std::stringstream again;
    back.write(again);
    std::stringstream first;
    c.write(first);
    CHECK(again.str() == first.str());
}

TEST_CASE("invalid configurations are rejected") {
    std::istringstream unknown("[train]\nwhat = 1\n");
    CHECK_THROWS(RunConfig::parse(unknown));
    std::istringstream bad_model("[model]\ntype = svm\n");
    CHECK_THROWS(RunConfig::parse(bad_model));
    std::istringstream no_path("[data]\nsource = movielens\n");
    CHECK_THROWS(RunConfig::parse(no_path));
    std::istringstream bad_p("[data]\np = 0\n");
    CHECK_THROWS(RunConfig::parse(bad_p));
}
