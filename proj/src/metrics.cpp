/* Copyright 2026 The ettk authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "ettk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ettk {

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
  if (cm.classes < 1 || cm.total() == 0) {
    throw ContractError("compute_metrics: empty confusion matrix");
  }
  MetricsReport report;
  Index correct = 0;
  double recall_sum = 0.0;
  Index recall_classes = 0;
  bool f1_defined = true;
  double f1_sum = 0.0;
  for (Index k = 0; k < cm.classes; ++k) {
    const Index tp = cm.at(k, k);
    const Index support = cm.support(k);
    const Index predicted = cm.predicted(k);
    correct += tp;

    std::optional<double> precision, recall, f1;
    if (predicted > 0) precision = static_cast<double>(tp) / static_cast<double>(predicted);
    if (support > 0) recall = static_cast<double>(tp) / static_cast<double>(support);
    if (precision && recall) {
      const double p = *precision, r = *recall;
      f1 = (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0;
    }
    report.precision.push_back(precision);
    report.recall.push_back(recall);
    report.f1.push_back(f1);
    if (recall) {
      recall_sum += *recall;
      ++recall_classes;
    }
    if (f1) {
      f1_sum += *f1;
    } else {
      f1_defined = false;
    }
  }
  report.macro_recall = recall_sum / static_cast<double>(recall_classes);
  report.overall_accuracy = static_cast<double>(correct) / static_cast<double>(cm.total());
  if (f1_defined) report.macro_f1 = f1_sum / static_cast<double>(cm.classes);
  return report;
}

namespace {

std::string opt_str(const std::optional<double>& v) {
  if (!v) return "absent";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

}  // namespace

std::string metrics_table(const MetricsReport& report, const std::vector<std::string>& class_names) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "UA (macro recall convention)      %.4f\n", report.macro_recall);
  os << buf;
  std::snprintf(buf, sizeof(buf), "WA (overall accuracy convention)  %.4f\n", report.overall_accuracy);
  os << buf;
  os << "macro F1                          " << opt_str(report.macro_f1) << "\n";
  std::snprintf(buf, sizeof(buf),
                "alternate convention              UA(overall)=%.4f WA(macro)=%.4f\n",
                report.overall_accuracy, report.macro_recall);
  os << buf;
  os << "class        precision  recall    f1\n";
  for (std::size_t k = 0; k < report.recall.size(); ++k) {
    const std::string name = k < class_names.size() ? class_names[k] : std::to_string(k);
    std::snprintf(buf, sizeof(buf), "%-12s %-10s %-9s %s\n", name.c_str(),
                  opt_str(report.precision[k]).c_str(), opt_str(report.recall[k]).c_str(),
                  opt_str(report.f1[k]).c_str());
    os << buf;
  }
  return os.str();
}

std::string metrics_record(const MetricsReport& report) {
  nlohmann::json j;
  j["ua_macro_recall"] = report.macro_recall;
  j["wa_overall_accuracy"] = report.overall_accuracy;
  j["alt_ua_overall_accuracy"] = report.overall_accuracy;
  j["alt_wa_macro_recall"] = report.macro_recall;
  if (report.macro_f1) {
    j["macro_f1"] = *report.macro_f1;
  } else {
    j["macro_f1"] = nullptr;
  }
  auto opt_vec = [](const std::vector<std::optional<double>>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& o : v) {
      if (o) {
        arr.push_back(*o);
      } else {
        arr.push_back(nullptr);
      }
    }
    return arr;
  };
  j["precision"] = opt_vec(report.precision);
  j["recall"] = opt_vec(report.recall);
  j["f1"] = opt_vec(report.f1);
  j["fold"] = report.fold_id;
  j["seed"] = report.seed;
  return j.dump();
}

std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names) {
  std::ostringstream os;
  os << "true\\pred";
  for (Index p = 0; p < cm.classes; ++p) {
    os << ',' << (p < static_cast<Index>(class_names.size()) ? class_names[static_cast<std::size_t>(p)]
                                                             : std::to_string(p));
  }
  os << '\n';
  for (Index t = 0; t < cm.classes; ++t) {
    os << (t < static_cast<Index>(class_names.size()) ? class_names[static_cast<std::size_t>(t)]
                                                      : std::to_string(t));
    for (Index p = 0; p < cm.classes; ++p) os << ',' << cm.at(t, p);
    os << '\n';
  }
  return os.str();
}

Index levenshtein(const std::string& a, const std::string& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<Index> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<Index>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<Index>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const Index sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double corpus_cer(const std::vector<std::string>& hypotheses,
                  const std::vector<std::string>& references) {
  if (hypotheses.size() != references.size()) {
    throw ContractError("corpus_cer: hypothesis/reference count mismatch");
  }
  Index edits = 0, chars = 0;
  for (std::size_t i = 0; i < references.size(); ++i) {
    edits += levenshtein(hypotheses[i], references[i]);
    chars += static_cast<Index>(references[i].size());
  }
  if (chars == 0) throw ContractError("corpus_cer: empty reference corpus");
  return static_cast<double>(edits) / static_cast<double>(chars);
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ContractError("pearson: series lengths differ");
  const std::size_t n = a.size();
  if (n < 2) return std::nullopt;
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0) return std::nullopt;
  return cov / std::sqrt(var_a * var_b);
}

}  // namespace ettk
