#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace catsketch {

using Vec = Eigen::VectorXd;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One observed coordinate. Rows are 0-based in memory and 1-based in files.
struct Entry {
    int row = 0;
    double value = 0.0;
};

/// Observed entries of the datum at time t.
struct PartialDatum {
    long t = 0;
    std::vector<Entry> entries;
};

struct Stream {
    int dimension = 0;
    std::vector<PartialDatum> data;

    std::size_t size() const { return data.size(); }
    std::size_t entry_count() const;
    /// Throws std::invalid_argument on out-of-range or duplicate rows.
    void validate() const;
};

/// Raised when an iterate stops being finite. `where` names the stage and
/// `index` the offending row or datum (-1 if not applicable).
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string where, long index, const std::string& detail)
        : std::runtime_error(where + (index >= 0 ? " [" + std::to_string(index) + "]" : "") + ": " + detail),
          where_(std::move(where)),
          index_(index) {}

    const std::string& where() const { return where_; }
    long index() const { return index_; }

private:
    std::string where_;
    long index_;
};

}  // namespace catsketch
