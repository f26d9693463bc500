#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace idm {

/// One subject's illness-death record.
///
/// `v` is the first observed time min(T1, T2, C). When the diagnosis is
/// observed first (`delta1`), `w` is the death or censoring time after it and
/// `delta3` flags an observed death; otherwise `w` is 0.
struct Observation {
  double v = 0.0;
  double w = 0.0;
  int delta1 = 0;
  int delta2 = 0;
  int delta3 = 0;
  std::vector<double> x;

  /// Number of observed transitions, D = delta1 + delta2 + delta3.
  int events() const noexcept { return delta1 + delta2 + delta3; }
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Observation> observations,
          std::vector<std::string> covariate_names);

  std::size_t size() const noexcept { return observations_.size(); }
  std::size_t dim() const noexcept { return covariate_names_.size(); }
  const Observation& operator[](std::size_t i) const { return observations_[i]; }
  const std::vector<Observation>& observations() const noexcept { return observations_; }
  const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }

  /// Index of a covariate by header name; throws ConfigError when absent.
  std::size_t covariate_index(const std::string& name) const;

  /// Non-fatal findings from validation (e.g. death recorded at the
  /// diagnosis instant).
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

 private:
  std::vector<Observation> observations_;
  std::vector<std::string> covariate_names_;
  std::vector<std::string> warnings_;
};

/// A parsed but unvalidated row; flags are kept as reals so that
/// non-binary values can be reported rather than silently truncated.
struct RawRecord {
  double v = 0.0;
  double w = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::vector<double> x;
};

/// Checks every observation invariant and builds a Dataset. Throws RowError
/// naming the first offending row.
Dataset validate(const std::vector<RawRecord>& records,
                 std::vector<std::string> covariate_names);

struct TransitionCounts {
  std::size_t n01 = 0;
  std::size_t n02 = 0;
  std::size_t n12 = 0;
  std::size_t n0 = 0;
  std::size_t n1 = 0;

  bool operator==(const TransitionCounts&) const = default;
};

TransitionCounts transition_counts(const Dataset& data) noexcept;

/// CSV with header `v,w,delta1,delta2,delta3,<covariates...>`. Columns are
/// matched by name; any other column is a covariate in header order.
Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const Dataset& data);
void write_csv_file(const std::string& path, const Dataset& data);

}  // namespace idm
