#ifndef ANTISPOOF_EVAL_H_
#define ANTISPOOF_EVAL_H_

#include <filesystem>
#include <string>
#include <vector>

namespace antispoof {

struct Trial {
  std::string id;
  double score = 0.0;
  bool genuine = false;
};

using TrialSet = std::vector<Trial>;

struct DetPoint {
  double threshold;
  double far;  // spoofed trials with score >= threshold
  double frr;  // genuine trials with score < threshold
};

// One point per distinct score in ascending order, plus a final point above
// the maximum score (+inf threshold). Throws unless both labels are present.
std::vector<DetPoint> det_points(const TrialSet& trials);

// Equal error rate in percent; linear interpolation between the two sweep
// points where FAR - FRR changes sign.
double compute_eer(const TrialSet& trials);

struct CodeRow {
  std::string id;
  bool genuine = false;
  std::vector<double> code;
};

// CSV "id,label_spoof,c0..c{dim-1}"; label_spoof is 1 for spoofed, 0 for genuine.
void export_codes(const std::vector<CodeRow>& rows, const std::filesystem::path& path);
std::vector<CodeRow> read_codes(const std::filesystem::path& path);

void write_det_csv(const std::filesystem::path& path, const std::vector<DetPoint>& points);

}  // namespace antispoof

#endif  // ANTISPOOF_EVAL_H_
