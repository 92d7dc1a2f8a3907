// Head/middle/tail class grouping from training counts, per-group accuracy,
// and report emission as CSV or JSONL.

#pragma once

#include <string>
#include <vector>

#include "fedlf/losses.hpp"

namespace fedlf {

struct GroupSpec {
    long head_threshold = 0;
    long tail_threshold = 0;
    std::vector<int> head;    // count > head_threshold
    std::vector<int> middle;  // everything else (equality lands here)
    std::vector<int> tail;    // count < tail_threshold
};

GroupSpec classify_groups(const std::vector<long>& train_counts,
                          long head_threshold, long tail_threshold);

struct GroupAccuracies {
    double head = 0.0;  // NaN when the group is empty
    double middle = 0.0;
    double tail = 0.0;
    double all = 0.0;
};

GroupAccuracies group_accuracies(const std::vector<int>& predictions,
                                 const std::vector<int>& labels,
                                 const GroupSpec& groups);

struct RoundReport {
    int round = 0;
    GroupAccuracies acc;
    LossBreakdown mean_loss;
    std::vector<int> client_ids;
};

enum class ReportFormat { kCsv, kJsonl };

// One row/line per round; floats fixed to six decimals; writes a temp file
// and renames it into place.
void emit_reports(const std::vector<RoundReport>& reports,
                  const std::string& path, ReportFormat format);

}  // namespace fedlf
