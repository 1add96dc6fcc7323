// Copyright 2026 The dacount Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

/// @file metrics.hpp
/// Counting metrics. MAE, RMSE and R^2 use raw real-valued predictions; the
/// difference-in-count family, MSE and percentage agreement use predictions
/// rounded with round_count().

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>

#include "dacount/core.hpp"
#include "dacount/density.hpp"

namespace dacount {

struct MetricReport {
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  bool r2_defined = true;  ///< false when every truth is equal
  double dic = 0.0;
  double dic_std = 0.0;
  double abs_dic = 0.0;
  double abs_dic_std = 0.0;
  double agreement_pct = 0.0;
  double mse = 0.0;
  std::size_t n = 0;
};

inline MetricReport compute_metrics(std::span<const double> pred, std::span<const std::int64_t> truth) {
  if (pred.size() != truth.size()) {
    throw std::invalid_argument("compute_metrics: " + std::to_string(pred.size()) + " predictions vs " +
                                std::to_string(truth.size()) + " ground-truth counts");
  }
  if (pred.empty()) throw std::invalid_argument("compute_metrics: no samples");
  const double n = static_cast<double>(pred.size());
  MetricReport r;
  r.n = pred.size();

  double abs_sum = 0.0, sq_sum = 0.0, truth_sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - static_cast<double>(truth[i]);
    abs_sum += std::abs(e);
    sq_sum += e * e;
    truth_sum += static_cast<double>(truth[i]);
  }
  r.mae = abs_sum / n;
  r.rmse = std::sqrt(sq_sum / n);

  const double truth_mean = truth_sum / n;
  double ss_tot = 0.0;
  for (auto t : truth) ss_tot += (static_cast<double>(t) - truth_mean) * (static_cast<double>(t) - truth_mean);
  if (ss_tot > 0.0) {
    r.r2 = 1.0 - sq_sum / ss_tot;
  } else {
    r.r2 = std::numeric_limits<double>::quiet_NaN();
    r.r2_defined = false;
  }

  double dic_sum = 0.0, abs_dic_sum = 0.0, sq_int = 0.0, agree = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(round_count(pred[i]) - truth[i]);
    dic_sum += d;
    abs_dic_sum += std::abs(d);
    sq_int += d * d;
    if (d == 0.0) agree += 1.0;
  }
  r.dic = dic_sum / n;
  r.abs_dic = abs_dic_sum / n;
  r.mse = sq_int / n;
  r.agreement_pct = 100.0 * agree / n;

  double dic_var = 0.0, abs_var = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(round_count(pred[i]) - truth[i]);
    dic_var += (d - r.dic) * (d - r.dic);
    abs_var += (std::abs(d) - r.abs_dic) * (std::abs(d) - r.abs_dic);
  }
  // population standard deviation across images
  r.dic_std = std::sqrt(dic_var / n);
  r.abs_dic_std = std::sqrt(abs_var / n);
  return r;
}

/// One `key=value` pair per line.
inline std::string to_key_value(const MetricReport& r) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "n=" << r.n << '\n'
     << "mae=" << r.mae << '\n'
     << "rmse=" << r.rmse << '\n'
     << "r2=" << (r.r2_defined ? r.r2 : std::numeric_limits<double>::quiet_NaN()) << '\n'
     << "r2_defined=" << (r.r2_defined ? "true" : "false") << '\n'
     << "dic=" << r.dic << '\n'
     << "dic_std_assumed=" << r.dic_std << '\n'
     << "abs_dic=" << r.abs_dic << '\n'
     << "abs_dic_std_assumed=" << r.abs_dic_std << '\n'
     << "mse=" << r.mse << '\n'
     << "agreement_pct=" << r.agreement_pct << '\n';
  return os.str();
}

inline constexpr const char* kLedgerHeader =
    "label\tn\tmae\trmse\tr2\tdic\tdic_std_assumed\tabs_dic\tabs_dic_std_assumed\tmse\tagreement_pct";

/// Appends one tab-separated row to @p path, writing the header if the file is new.
inline void append_to_ledger(const std::filesystem::path& path, const std::string& label, const MetricReport& r) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream os(path, std::ios::app);
  if (!os) throw IoError("cannot append to evaluation ledger '" + path.string() + "'");
  if (fresh) os << kLedgerHeader << '\n';
  os << std::setprecision(10) << label << '\t' << r.n << '\t' << r.mae << '\t' << r.rmse << '\t'
     << (r.r2_defined ? std::to_string(r.r2) : std::string("nan")) << '\t' << r.dic << '\t' << r.dic_std << '\t'
     << r.abs_dic << '\t' << r.abs_dic_std << '\t' << r.mse << '\t' << r.agreement_pct << '\n';
}

/// Pearson correlation; NaN when either side has zero variance.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("pearson: need equal nonempty inputs");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

}  // namespace dacount
