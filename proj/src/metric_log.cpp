// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#include "uniloss/metric_log.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "uniloss/error.hpp"

namespace uniloss {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

MetricLogWriter::MetricLogWriter(std::string path,
                                 const std::map<std::string, std::string>& config)
    : path_(std::move(path)) {
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::trunc);
    require(out.good(), "cannot open metric log for write: " + path_);
    for (const auto& [k, v] : config) out << "# " << k << " = " << v << "\n";
    out << metric_log_header << "\n";
}

void MetricLogWriter::append(const MetricLogRow& row) {
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::app);
    require(out.good(), "cannot append to metric log: " + path_);
    out << row.run_id << ',' << row.epoch << ',' << row.split << ',' << row.loss_name << ','
        << format_double(row.surrogate_loss) << ',' << format_double(row.true_metric) << ','
        << format_double(row.wallclock_s) << "\n";
}

std::vector<MetricLogRow> read_metric_log(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open metric log: " + path);
    std::vector<MetricLogRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("run_id,", 0) == 0) continue;
        std::istringstream ls(line);
        MetricLogRow r;
        std::string field;
        std::getline(ls, r.run_id, ',');
        std::getline(ls, field, ',');
        r.epoch = std::stoi(field);
        std::getline(ls, r.split, ',');
        std::getline(ls, r.loss_name, ',');
        std::getline(ls, field, ',');
        r.surrogate_loss = std::stod(field);
        std::getline(ls, field, ',');
        r.true_metric = std::stod(field);
        std::getline(ls, field, ',');
        r.wallclock_s = std::stod(field);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace uniloss
