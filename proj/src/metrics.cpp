#include "fedlf/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace fedlf {
namespace {

std::string fixed6(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// JSON has no NaN literal, so empty groups serialize as null.
std::string json6(double v) {
    if (std::isnan(v)) return "null";
    return fixed6(v);
}

std::string join_clients(const std::vector<int>& ids, char sep) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out.push_back(sep);
        out += std::to_string(ids[i]);
    }
    return out;
}

}  // namespace

GroupSpec classify_groups(const std::vector<long>& train_counts,
                          long head_threshold, long tail_threshold) {
    if (head_threshold < tail_threshold)
        throw std::invalid_argument(
            "classify_groups: head_threshold " + std::to_string(head_threshold) +
            " below tail_threshold " + std::to_string(tail_threshold));

    GroupSpec spec;
    spec.head_threshold = head_threshold;
    spec.tail_threshold = tail_threshold;
    for (int c = 0; c < static_cast<int>(train_counts.size()); ++c) {
        if (train_counts[c] > head_threshold)
            spec.head.push_back(c);
        else if (train_counts[c] < tail_threshold)
            spec.tail.push_back(c);
        else
            spec.middle.push_back(c);
    }
    return spec;
}

GroupAccuracies group_accuracies(const std::vector<int>& predictions,
                                 const std::vector<int>& labels,
                                 const GroupSpec& groups) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("group_accuracies: " +
                                    std::to_string(predictions.size()) +
                                    " predictions vs " +
                                    std::to_string(labels.size()) + " labels");

    const int num_classes =
        static_cast<int>(groups.head.size() + groups.middle.size() +
                         groups.tail.size());
    enum { kHead, kMiddle, kTail };
    std::vector<int> membership(num_classes, kMiddle);
    for (int c : groups.head) membership[c] = kHead;
    for (int c : groups.tail) membership[c] = kTail;

    long correct[3] = {0, 0, 0};
    long total[3] = {0, 0, 0};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= num_classes)
            throw std::invalid_argument("group_accuracies: label " +
                                        std::to_string(y) +
                                        " outside the grouped class range");
        const int g = membership[y];
        ++total[g];
        if (predictions[i] == y) ++correct[g];
    }

    auto ratio = [](long c, long t) {
        return t > 0 ? static_cast<double>(c) / static_cast<double>(t)
                     : std::numeric_limits<double>::quiet_NaN();
    };
    GroupAccuracies acc;
    acc.head = ratio(correct[kHead], total[kHead]);
    acc.middle = ratio(correct[kMiddle], total[kMiddle]);
    acc.tail = ratio(correct[kTail], total[kTail]);
    acc.all = ratio(correct[0] + correct[1] + correct[2],
                    total[0] + total[1] + total[2]);
    return acc;
}

void emit_reports(const std::vector<RoundReport>& reports,
                  const std::string& path, ReportFormat format) {
    std::string body;
    if (format == ReportFormat::kCsv) {
        body =
            "round,acc_head,acc_middle,acc_tail,acc_all,"
            "loss_a,loss_c,loss_d,loss_total,clients\n";
        for (const RoundReport& r : reports) {
            body += std::to_string(r.round);
            body += ',';
            body += fixed6(r.acc.head) + ',' + fixed6(r.acc.middle) + ',' +
                    fixed6(r.acc.tail) + ',' + fixed6(r.acc.all) + ',';
            body += fixed6(r.mean_loss.l_a) + ',' + fixed6(r.mean_loss.l_c) +
                    ',' + fixed6(r.mean_loss.l_d) + ',' +
                    fixed6(r.mean_loss.total) + ',';
            body += join_clients(r.client_ids, ';');
            body += '\n';
        }
    } else {
        for (const RoundReport& r : reports) {
            body += "{\"round\":" + std::to_string(r.round);
            body += ",\"acc_head\":" + json6(r.acc.head);
            body += ",\"acc_middle\":" + json6(r.acc.middle);
            body += ",\"acc_tail\":" + json6(r.acc.tail);
            body += ",\"acc_all\":" + json6(r.acc.all);
            body += ",\"loss_a\":" + json6(r.mean_loss.l_a);
            body += ",\"loss_c\":" + json6(r.mean_loss.l_c);
            body += ",\"loss_d\":" + json6(r.mean_loss.l_d);
            body += ",\"loss_total\":" + json6(r.mean_loss.total);
            body += ",\"clients\":[" + join_clients(r.client_ids, ',') + "]}\n";
        }
    }

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("emit_reports: cannot open " + tmp);
        out.write(body.data(), static_cast<std::streamsize>(body.size()));
        if (!out) throw std::runtime_error("emit_reports: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("emit_reports: rename failed for " + path);
    }
}

}  // namespace fedlf
