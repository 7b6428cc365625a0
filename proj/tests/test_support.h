#ifndef ANTISPOOF_TESTS_TEST_SUPPORT_H_
#define ANTISPOOF_TESTS_TEST_SUPPORT_H_

// Independent reference implementations used as test oracles, plus small
// fixtures shared by the unit tests and the acceptance binary.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "antispoof/eval.h"
#include "antispoof/random.h"
#include "antispoof/tensor.h"

namespace antispoof::testing {

// O(n*m) full linear convolution.
std::vector<double> direct_convolve(std::span<const double> x, std::span<const double> h);

// EER by enumerating every threshold interval: one candidate per distinct
// score plus one above the maximum, each counted from scratch; the FAR/FRR
// curves are then interpolated where their difference changes sign.
double brute_force_eer(const TrialSet& trials);

// sum_d ln( exp(-(c-m)^2 / (2 s^2)) / (s sqrt(2 pi)) ), each factor evaluated
// as a density and logged.
double log_density_product(std::span<const double> mean, std::span<const double> std,
                           std::span<const double> code);

TensorD random_tensor(const Shape& shape, Rng& rng, double scale = 1.0);

// Fresh empty directory under the system temp dir; removed by the destructor.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag);
  ~ScratchDir();
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);

}  // namespace antispoof::testing

#endif  // ANTISPOOF_TESTS_TEST_SUPPORT_H_
