#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace mvmdlstm::signal {

/// N x C block of real samples on a uniform time grid.
///
/// Construction validates the invariants (finite samples, N >= 2, C >= 1,
/// one name per channel, dt > 0); after that the object is read-only.
class MultichannelSeries {
 public:
  MultichannelSeries(Eigen::MatrixXd values, double dt, std::vector<std::string> channel_names);

  /// Names default to ch1..chC.
  MultichannelSeries(Eigen::MatrixXd values, double dt = 300.0);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  double dt() const noexcept { return dt_; }
  const std::vector<std::string>& channel_names() const noexcept { return names_; }

  Eigen::Index n_samples() const noexcept { return values_.rows(); }
  Eigen::Index n_channels() const noexcept { return values_.cols(); }

  Eigen::VectorXd channel(Eigen::Index j) const { return values_.col(j); }

  /// Rows [begin, begin + count) as a new series with the same dt and names.
  MultichannelSeries slice(Eigen::Index begin, Eigen::Index count) const;

 private:
  Eigen::MatrixXd values_;
  double dt_;
  std::vector<std::string> names_;
};

std::vector<std::string> default_channel_names(Eigen::Index n_channels);

/// Half-sample symmetric reflection of N/2 samples on the left and N - N/2 on
/// the right, giving length 2N. The input occupies rows [N/2, N/2 + N).
MultichannelSeries mirror_extend(const MultichannelSeries& series);

/// Index of the first original sample inside a mirror_extend output.
inline Eigen::Index mirror_offset(Eigen::Index n_original) { return n_original / 2; }

}  // namespace mvmdlstm::signal
