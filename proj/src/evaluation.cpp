// src/evaluation.cpp

// Copyright 2026  mvspoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "mvspoof/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cfenv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace mvspoof {

EerResult compute_eer(const std::vector<double>& bonafide, const std::vector<double>& spoof) {
  MVSPOOF_CHECK(!bonafide.empty() && !spoof.empty(),
                "EER needs at least one bonafide and one spoof score");
  for (const auto* v : {&bonafide, &spoof})
    for (double s : *v) MVSPOOF_CHECK(std::isfinite(s), "EER input contains a non-finite score");

  std::vector<double> b = bonafide, s = spoof;
  std::sort(b.begin(), b.end());
  std::sort(s.begin(), s.end());
  std::vector<double> thr(b);
  thr.insert(thr.end(), s.begin(), s.end());
  std::sort(thr.begin(), thr.end());
  thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
  thr.push_back(std::numeric_limits<double>::infinity());

  const double nb = static_cast<double>(b.size()), ns = static_cast<double>(s.size());
  auto rates = [&](double t) {
    const double frr = static_cast<double>(std::lower_bound(b.begin(), b.end(), t) - b.begin()) / nb;
    const double far =
        static_cast<double>(s.end() - std::lower_bound(s.begin(), s.end(), t)) / ns;
    return std::pair<double, double>(frr, far);
  };

  // At the lowest threshold FRR = 0 and FAR = 1; at +inf FRR = 1 and FAR = 0,
  // so FAR - FRR always changes sign somewhere along the sweep.
  auto [frr0, far0] = rates(thr[0]);
  for (std::size_t k = 1; k < thr.size(); ++k) {
    const auto [frr1, far1] = rates(thr[k]);
    const double d0 = far0 - frr0, d1 = far1 - frr1;
    if (d1 <= 0) {
      if (d1 == 0) return {100.0 * frr1, thr[k]};
      const double a = d0 / (d0 - d1);
      const double eer = frr0 + a * (frr1 - frr0);
      // The sentinel has no finite position; report the last real score.
      const double t = std::isinf(thr[k]) ? thr[k - 1] : thr[k - 1] + a * (thr[k] - thr[k - 1]);
      return {100.0 * eer, t};
    }
    frr0 = frr1;
    far0 = far1;
  }
  throw Error("EER sweep found no crossing");  // unreachable
}

EerResult compute_eer(const std::vector<TrialScore>& scores) {
  std::vector<double> b, s;
  for (const auto& t : scores) (t.label == Label::kBonafide ? b : s).push_back(t.score);
  return compute_eer(b, s);
}

std::vector<TrialScore> score_manifest(DetectorModel& model, const FeatureExtractor& extractor,
                                       const std::vector<View>& views,
                                       const TrialManifest& manifest, int jobs) {
  const std::size_t n = manifest.records.size();
  std::vector<TrialScore> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const auto& r = manifest.records[i];
        out[i] = {r.path, score_utterance(model, extractor.extract(r.path, views)), r.label};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace {

std::string views_label(const FusionConfig& c) {
  std::vector<std::string> names;
  for (View v : c.views) names.emplace_back(view_name(v));
  std::sort(names.begin(), names.end());
  std::string s;
  for (const auto& n : names) s += (s.empty() ? "" : "+") + n;
  return s;
}

}  // namespace

EvalReport cross_dataset_eval(const DetectorCheckpoint& checkpoint,
                              const FeatureExtractor& extractor,
                              const std::vector<TrialManifest>& manifests,
                              const std::filesystem::path& score_dir, int jobs) {
  MVSPOOF_CHECK(checkpoint.model != nullptr, "checkpoint holds no model");
  MVSPOOF_CHECK(!manifests.empty(), "no manifests to evaluate");
  const auto& views = checkpoint.fusion.views;
  const std::string fp = extractor.fingerprint(views);
  if (fp != checkpoint.extractor_fingerprint)
    throw Error("feature extractors differ from the ones the checkpoint was trained with\n  checkpoint: " +
                checkpoint.extractor_fingerprint + "\n  current:    " + fp);

  EvalReport report;
  report.seeds.push_back(checkpoint.train.seed);
  std::set<std::string> used;
  for (std::size_t m = 0; m < manifests.size(); ++m) {
    const TrialManifest& man = manifests[m];
    man.require_two_class();
    const auto scores = score_manifest(*checkpoint.model, extractor, views, man, jobs);
    EvalRow row;
    // Prefer the records' common dataset tag over the manifest file name.
    row.dataset = man.records.front().dataset;
    for (const auto& r : man.records)
      if (r.dataset != row.dataset) row.dataset = man.name;
    if (row.dataset.empty()) row.dataset = "manifest" + std::to_string(m);
    row.views = views_label(checkpoint.fusion);
    row.mode = fusion_mode_name(checkpoint.fusion.mode);
    const EerResult e = compute_eer(scores);
    row.eer = e.eer;
    row.threshold = e.threshold;
    row.n_bonafide = static_cast<int>(man.count(Label::kBonafide));
    row.n_spoof = static_cast<int>(man.count(Label::kSpoof));
    if (row.eer > 50.0)
      std::cerr << "warning: EER " << format_eer(row.eer) << "% on " << row.dataset
                << " is worse than chance\n";
    report.rows.push_back(row);
    if (!score_dir.empty()) {
      std::string stem = row.dataset;
      if (!used.insert(stem).second) stem += "." + std::to_string(m);
      write_score_file(score_dir / (stem + ".scores"), scores);
    }
  }
  return report;
}

void write_score_file(const std::filesystem::path& path, const std::vector<TrialScore>& scores) {
  atomic_write(path, [&](std::ostream& os) {
    os << std::setprecision(17);
    for (const auto& t : scores)
      os << t.path.string() << '\t' << t.score << '\t' << label_name(t.label) << '\n';
  });
}

std::vector<TrialScore> read_score_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open score file " + path.string());
  std::vector<TrialScore> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 3)
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected path<TAB>score<TAB>label");
    TrialScore t;
    t.path = f[0];
    try {
      std::size_t pos = 0;
      t.score = std::stod(f[1], &pos);
      if (pos != f[1].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": bad score '" + f[1] + "'");
    }
    t.label = parse_label(f[2]);
    out.push_back(t);
  }
  return out;
}

EvalReport average_reports(const std::vector<EvalReport>& reports) {
  MVSPOOF_CHECK(!reports.empty(), "nothing to average");
  EvalReport out;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> pos;
  std::set<std::string> checkpoints;
  for (const auto& r : reports) {
    checkpoints.insert(r.checkpoint);
    out.seeds.insert(out.seeds.end(), r.seeds.begin(), r.seeds.end());
    for (const auto& row : r.rows) {
      const auto key = std::make_tuple(row.dataset, row.views, row.mode);
      auto it = pos.find(key);
      if (it == pos.end()) {
        pos.emplace(key, out.rows.size());
        out.rows.push_back(row);
        out.rows.back().eer *= row.n_runs;
        out.rows.back().threshold *= row.n_runs;
        continue;
      }
      EvalRow& acc = out.rows[it->second];
      MVSPOOF_CHECK(acc.n_bonafide == row.n_bonafide && acc.n_spoof == row.n_spoof,
                    "cannot average rows for " + row.dataset + " with different trial counts");
      acc.eer += row.eer * row.n_runs;
      acc.threshold += row.threshold * row.n_runs;
      acc.n_runs += row.n_runs;
    }
  }
  for (auto& row : out.rows) {
    row.eer /= row.n_runs;
    row.threshold /= row.n_runs;
  }
  for (const auto& c : checkpoints) out.checkpoint += (out.checkpoint.empty() ? "" : ",") + c;
  return out;
}

std::string format_eer(double eer) {
  MVSPOOF_CHECK(std::isfinite(eer), "cannot format a non-finite EER");
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double cents = std::nearbyint(eer * 100.0);
  std::fesetround(saved);
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << cents / 100.0;
  return os.str();
}

namespace {

void require_rows(const EvalReport& r) {
  MVSPOOF_CHECK(!r.rows.empty(), "cannot render an empty report");
}

std::string format_threshold(double t) {
  std::ostringstream os;
  os << std::setprecision(6) << t;
  return os.str();
}

}  // namespace

std::string render_table(const EvalReport& report) {
  require_rows(report);
  const std::vector<std::string> head{"dataset", "views", "mode", "EER(%)", "bonafide", "spoof",
                                      "threshold", "runs"};
  std::vector<std::vector<std::string>> cells{head};
  for (const auto& r : report.rows)
    cells.push_back({r.dataset, r.views, r.mode, format_eer(r.eer), std::to_string(r.n_bonafide),
                     std::to_string(r.n_spoof), format_threshold(r.threshold),
                     std::to_string(r.n_runs)});
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream os;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      // Text columns left aligned, numbers right aligned.
      const bool left = c < 3;
      const std::string pad(width[c] - row[c].size(), ' ');
      line += (c ? "  " : "") + (left ? row[c] + pad : pad + row[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    os << line << '\n';
  }
  return os.str();
}

std::string render_key_values(const EvalReport& report) {
  require_rows(report);
  std::ostringstream os;
  os << "checkpoint=" << (report.checkpoint.empty() ? "-" : report.checkpoint) << " seeds=";
  for (std::size_t i = 0; i < report.seeds.size(); ++i) os << (i ? "," : "") << report.seeds[i];
  if (report.seeds.empty()) os << "-";
  os << '\n';
  for (const auto& r : report.rows)
    os << "dataset=" << r.dataset << " views=" << r.views << " mode=" << r.mode
       << " eer=" << format_eer(r.eer) << " n_bonafide=" << r.n_bonafide
       << " n_spoof=" << r.n_spoof << " threshold=" << std::setprecision(17) << r.threshold
       << " runs=" << r.n_runs << " eer_exact=" << r.eer << '\n';
  return os.str();
}

std::string render_report(const EvalReport& report) {
  return render_table(report) + "\n" + render_key_values(report);
}

EvalReport parse_report(const std::string& text) {
  EvalReport out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.find('=') == std::string::npos) continue;
    std::map<std::string, std::string> kv;
    for (const auto& tok : split(line, ' ')) {
      if (tok.empty()) continue;
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw Error("malformed report line: " + line);
      kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    if (kv.count("checkpoint")) {
      out.checkpoint = kv["checkpoint"] == "-" ? "" : kv["checkpoint"];
      if (kv["seeds"] != "-" && !kv["seeds"].empty())
        for (const auto& s : split(kv["seeds"], ',')) out.seeds.push_back(std::stoull(s));
      continue;
    }
    try {
      EvalRow r;
      r.dataset = kv.at("dataset");
      r.views = kv.at("views");
      r.mode = kv.at("mode");
      r.eer = std::stod(kv.count("eer_exact") ? kv["eer_exact"] : kv.at("eer"));
      r.n_bonafide = std::stoi(kv.at("n_bonafide"));
      r.n_spoof = std::stoi(kv.at("n_spoof"));
      r.threshold = std::stod(kv.at("threshold"));
      r.n_runs = kv.count("runs") ? std::stoi(kv["runs"]) : 1;
      out.rows.push_back(r);
    } catch (const std::exception&) {
      throw Error("malformed report line: " + line);
    }
  }
  MVSPOOF_CHECK(!out.rows.empty(), "report contains no rows");
  return out;
}

}  // namespace mvspoof
