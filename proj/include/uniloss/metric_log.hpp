// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0
//
// Append-only CSV metric log. Header: `# key = value` lines echoing the
// effective configuration, then one CSV header row, then data rows.
// wallclock_s is informational; reproducibility comparisons ignore it.

#pragma once

#include <map>
#include <string>
#include <vector>

namespace uniloss {

struct MetricLogRow {
    std::string run_id;
    int epoch = 0;
    std::string split;      // train | val | test
    std::string loss_name;  // uniloss | ce | mse
    double surrogate_loss = 0.0;  // NaN for splits where no loss was computed
    double true_metric = 0.0;
    double wallclock_s = 0.0;
};

class MetricLogWriter {
public:
    // Creates/truncates the file, echoes `config` as `# key = value` lines and
    // writes the column header. An empty path disables writing.
    MetricLogWriter(std::string path, const std::map<std::string, std::string>& config);

    void append(const MetricLogRow& row);
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// Rows only (comment lines and the header row skipped).
std::vector<MetricLogRow> read_metric_log(const std::string& path);

// Formats a double with enough digits to round-trip exactly.
std::string format_double(double v);

inline const char* metric_log_header =
    "run_id,epoch,split,loss_name,surrogate_loss,true_metric,wallclock_s";

}  // namespace uniloss
