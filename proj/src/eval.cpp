#include "respcls/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "respcls/strfmt.hpp"

namespace respcls {

PredictionRecord infer_cycle(const Network& net, const FeatureNorm& norm,
                             const RespiratoryCycle& cycle,
                             std::size_t target_len) {
  auto padded = pad_or_crop(cycle.samples, target_len);
  MelSpectrogram spec = mel_spectrogram(padded);
  apply_norm(spec, norm);
  auto f = net.forward(spec.values);

  PredictionRecord rec;
  rec.cycle_id = cycle.cycle_id();
  rec.truth = cycle.label;
  rec.patient = cycle.patient;
  rec.probs.resize(f.main_logits.size());
  for (std::size_t i = 0; i < f.main_logits.size(); ++i) {
    rec.probs[i] = stable_sigmoid(f.main_logits[i]);
  }
  return rec;
}

std::vector<PredictionRecord> infer_cycles(
    const Network& net, const FeatureNorm& norm,
    const std::vector<RespiratoryCycle>& cycles, std::size_t target_len,
    int threads) {
  std::vector<PredictionRecord> out(cycles.size());
  parallel_for(cycles.size(), threads, [&](std::size_t i) {
    out[i] = infer_cycle(net, norm, cycles[i], target_len);
  });
  return out;
}

IcbhiClass binarize_and_classify(std::span<const double> probs) {
  if (probs.size() != 2 && probs.size() != 3) {
    throw std::invalid_argument("probability vector must have 2 or 3 entries");
  }
  Label3 bits;
  if (probs.size() == 3) {
    bits.normal = probs[0] >= 0.5 ? 1 : 0;
    bits.crackle = probs[1] >= 0.5 ? 1 : 0;
    bits.wheeze = probs[2] >= 0.5 ? 1 : 0;
  } else {
    bits.normal = 0;
    bits.crackle = probs[0] >= 0.5 ? 1 : 0;
    bits.wheeze = probs[1] >= 0.5 ? 1 : 0;
  }
  return to_icbhi_class(bits);
}

EvalReport icbhi_metrics(const std::vector<PredictionRecord>& records) {
  EvalReport rep;
  rep.n_records = static_cast<int>(records.size());
  for (const auto& r : records) {
    if (!r.truth.is_legal_original()) {
      throw std::invalid_argument("record " + r.cycle_id +
                                  " has a non-original truth label");
    }
    auto t = static_cast<int>(to_icbhi_class(r.truth));
    auto p = static_cast<int>(binarize_and_classify(r.probs));
    ++rep.confusion[t][p];
    ++rep.support[t];
  }

  const int n_normal = rep.support[0];
  const int n_abnormal = rep.support[1] + rep.support[2] + rep.support[3];
  if (n_normal > 0) {
    rep.sp = 100.0 * rep.confusion[0][0] / static_cast<double>(n_normal);
  }
  if (n_abnormal > 0) {
    int correct = rep.confusion[1][1] + rep.confusion[2][2] + rep.confusion[3][3];
    rep.se = 100.0 * correct / static_cast<double>(n_abnormal);
  }
  if (rep.sp && rep.se) rep.score = (*rep.sp + *rep.se) / 2.0;
  return rep;
}

EvalReport full_report(const std::vector<PredictionRecord>& records) {
  EvalReport rep = icbhi_metrics(records);
  const bool has_normal_prob =
      !records.empty() && records.front().probs.size() == 3;
  if (has_normal_prob) rep.ap_normal = pr_curve_and_ap(records, 0).ap;
  rep.ap_crackle = pr_curve_and_ap(records, 1).ap;
  rep.ap_wheeze = pr_curve_and_ap(records, 2).ap;
  return rep;
}

PrCurve pr_curve_and_ap(const std::vector<PredictionRecord>& records,
                        int class_bit) {
  if (class_bit < 0 || class_bit > 2) {
    throw std::invalid_argument("class_bit must be 0, 1 or 2");
  }
  std::vector<std::pair<double, int>> scored;  // (score, is_positive)
  scored.reserve(records.size());
  for (const auto& r : records) {
    double score;
    if (r.probs.size() == 3) {
      score = r.probs[static_cast<std::size_t>(class_bit)];
    } else {
      if (class_bit == 0) {
        throw std::invalid_argument(
            "normal probability unavailable for 2-label records");
      }
      score = r.probs[static_cast<std::size_t>(class_bit - 1)];
    }
    int pos = class_bit == 0   ? r.truth.normal
              : class_bit == 1 ? r.truth.crackle
                               : r.truth.wheeze;
    scored.emplace_back(score, pos);
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  PrCurve curve;
  for (const auto& [s, p] : scored) curve.n_pos += p;
  if (curve.n_pos == 0) return curve;  // AP undefined, flagged by nullopt

  double ap = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < scored.size()) {
    const double threshold = scored[i].first;
    // consume the whole tie group
    for (; i < scored.size() && scored[i].first == threshold; ++i) {
      if (scored[i].second) {
        ++tp;
      } else {
        ++fp;
      }
    }
    PrPoint pt;
    pt.threshold = threshold;
    pt.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    pt.recall = static_cast<double>(tp) / static_cast<double>(curve.n_pos);
    curve.points.push_back(pt);
    ap += (pt.recall - prev_recall) * pt.precision;
    prev_recall = pt.recall;
  }
  curve.ap = ap;
  return curve;
}

AggregateReport aggregate_runs(const std::vector<EvalReport>& reports) {
  if (reports.size() < 2) {
    throw std::invalid_argument("aggregation needs at least two runs");
  }
  AggregateReport agg;
  agg.n_runs = static_cast<int>(reports.size());

  auto combine = [&](auto getter) -> std::optional<MetricStats> {
    std::vector<double> vals;
    for (const auto& r : reports) {
      auto v = getter(r);
      if (!v) return std::nullopt;  // undefined in any run → undefined overall
      vals.push_back(*v);
    }
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    MetricStats st;
    st.mean = mean;
    st.stddev = std::sqrt(ss / static_cast<double>(vals.size() - 1));
    return st;
  };

  agg.sp = combine([](const EvalReport& r) { return r.sp; });
  agg.se = combine([](const EvalReport& r) { return r.se; });
  agg.score = combine([](const EvalReport& r) { return r.score; });
  agg.ap_normal = combine([](const EvalReport& r) { return r.ap_normal; });
  agg.ap_crackle = combine([](const EvalReport& r) { return r.ap_crackle; });
  agg.ap_wheeze = combine([](const EvalReport& r) { return r.ap_wheeze; });
  return agg;
}

namespace {

const char* sample_tag(const Label3& a, const Label3& b) {
  const bool a_normal = a.normal && !a.crackle && !a.wheeze;
  const bool b_normal = b.normal && !b.crackle && !b.wheeze;
  if (a_normal && b_normal) return "pure-normal";
  if (!a_normal && !b_normal) return "pure-abnormal";
  return "mixed";
}

}  // namespace

void export_embeddings(const Network& net, const FeatureNorm& norm,
                       std::span<const PairPlan> plans,
                       const std::vector<RespiratoryCycle>& cycles,
                       const AugmentConfig& cfg,
                       const std::filesystem::path& path, int threads) {
  std::vector<std::vector<Real>> embeddings(plans.size());
  parallel_for(plans.size(), threads, [&](std::size_t i) {
    AugmentedSample s = materialize(plans[i], cycles, cfg);
    MelSpectrogram spec = mel_spectrogram(s.waveform);
    apply_norm(spec, norm);
    embeddings[i] = net.forward(spec.values).z;
  });

  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write embeddings: " + path.string());
  f << "sample_id,tag";
  const std::size_t d = net.config().embed_dim;
  for (std::size_t k = 0; k < d; ++k) f << ",z" << k;
  f << '\n';
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto& p = plans[i];
    f << cycles[p.anchor].cycle_id() << '+' << cycles[p.partner].cycle_id()
      << ',' << sample_tag(cycles[p.anchor].label, cycles[p.partner].label);
    for (double v : embeddings[i]) f << ',' << fmt_double(v);
    f << '\n';
  }
}

void write_predictions_csv(const std::filesystem::path& path,
                           const std::vector<PredictionRecord>& records) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write predictions: " + path.string());
  f << "cycle_id,p_normal,p_crackle,p_wheeze,true_normal,true_crackle,"
       "true_wheeze\n";
  for (const auto& r : records) {
    double pn = r.probs.size() == 3 ? r.probs[0] : 0.0;
    double pc = r.probs.size() == 3 ? r.probs[1] : r.probs[0];
    double pw = r.probs.size() == 3 ? r.probs[2] : r.probs[1];
    f << r.cycle_id << ',' << fmt_double(pn) << ',' << fmt_double(pc) << ','
      << fmt_double(pw) << ',' << int(r.truth.normal) << ','
      << int(r.truth.crackle) << ',' << int(r.truth.wheeze) << '\n';
  }
}

namespace {

std::string opt_str(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string();
}

}  // namespace

void write_metrics_csv(const std::filesystem::path& path,
                       const EvalReport& rep) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write metrics: " + path.string());
  f << "sp,se,score,ap_normal,ap_crackle,ap_wheeze,n_records\n";
  f << opt_str(rep.sp) << ',' << opt_str(rep.se) << ',' << opt_str(rep.score)
    << ',' << opt_str(rep.ap_normal) << ',' << opt_str(rep.ap_crackle) << ','
    << opt_str(rep.ap_wheeze) << ',' << rep.n_records << '\n';
}

EvalReport read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open metrics: " + path.string());
  std::string header, row;
  if (!std::getline(f, header) || !std::getline(f, row)) {
    throw std::runtime_error("truncated metrics file: " + path.string());
  }
  std::vector<std::string> cells;
  std::stringstream ss(row);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  while (cells.size() < 7) cells.emplace_back();

  auto opt = [](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
  };
  EvalReport rep;
  rep.sp = opt(cells[0]);
  rep.se = opt(cells[1]);
  rep.score = opt(cells[2]);
  rep.ap_normal = opt(cells[3]);
  rep.ap_crackle = opt(cells[4]);
  rep.ap_wheeze = opt(cells[5]);
  rep.n_records = cells[6].empty() ? 0 : std::stoi(cells[6]);
  return rep;
}

void write_report_text(const std::filesystem::path& path,
                       const EvalReport& rep) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write report: " + path.string());
  auto pct = [](const std::optional<double>& v) {
    return v ? fmt_double(*v) + "%" : std::string("undefined (zero support)");
  };
  f << "records:     " << rep.n_records << '\n';
  f << "specificity: " << pct(rep.sp) << '\n';
  f << "sensitivity: " << pct(rep.se) << '\n';
  f << "score:       " << pct(rep.score) << '\n';
  if (rep.ap_normal) f << "ap_normal:   " << fmt_double(*rep.ap_normal) << '\n';
  if (rep.ap_crackle) {
    f << "ap_crackle:  " << fmt_double(*rep.ap_crackle) << '\n';
  }
  if (rep.ap_wheeze) f << "ap_wheeze:   " << fmt_double(*rep.ap_wheeze) << '\n';
  f << "\nconfusion (rows = truth, cols = predicted):\n";
  f << "            normal crackle  wheeze    both\n";
  for (int t = 0; t < 4; ++t) {
    f << std::string(12 - std::string(to_string(static_cast<IcbhiClass>(t))).size(),
                     ' ')
      << to_string(static_cast<IcbhiClass>(t));
    for (int p = 0; p < 4; ++p) {
      std::string v = std::to_string(rep.confusion[t][p]);
      f << std::string(8 - v.size(), ' ') << v;
    }
    f << '\n';
  }
}

void write_aggregate_csv(const std::filesystem::path& path,
                         const AggregateReport& agg) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write aggregate: " + path.string());
  f << "metric,mean,stddev,n_runs\n";
  auto row = [&](const char* name, const std::optional<MetricStats>& st) {
    if (!st) return;
    f << name << ',' << fmt_double(st->mean) << ',' << fmt_double(st->stddev)
      << ',' << agg.n_runs << '\n';
  };
  row("sp", agg.sp);
  row("se", agg.se);
  row("score", agg.score);
  row("ap_normal", agg.ap_normal);
  row("ap_crackle", agg.ap_crackle);
  row("ap_wheeze", agg.ap_wheeze);
}

void write_aggregate_text(const std::filesystem::path& path,
                          const AggregateReport& agg) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write aggregate: " + path.string());
  f << "runs: " << agg.n_runs << '\n';
  auto row = [&](const char* name, const std::optional<MetricStats>& st) {
    f << name << ": ";
    if (st) {
      f << fmt_double(st->mean) << " +/- " << fmt_double(st->stddev);
    } else {
      f << "undefined";
    }
    f << '\n';
  };
  row("specificity", agg.sp);
  row("sensitivity", agg.se);
  row("score", agg.score);
  row("ap_normal", agg.ap_normal);
  row("ap_crackle", agg.ap_crackle);
  row("ap_wheeze", agg.ap_wheeze);
}

void write_pr_csv(const std::filesystem::path& path, const PrCurve& curve) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write PR curve: " + path.string());
  f << "threshold,precision,recall\n";
  for (const auto& p : curve.points) {
    f << fmt_double(p.threshold) << ',' << fmt_double(p.precision) << ','
      << fmt_double(p.recall) << '\n';
  }
}

void write_pr_svg(const std::filesystem::path& path, const PrCurve& curve,
                  const std::string& title) {
  constexpr double kW = 480.0, kH = 480.0, kMargin = 48.0;
  auto px = [&](double recall) {
    return kMargin + recall * (kW - 2 * kMargin);
  };
  auto py = [&](double precision) {
    return kH - kMargin - precision * (kH - 2 * kMargin);
  };
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write SVG: " + path.string());
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW << "' height='"
    << kH << "'>\n";
  f << "<rect width='100%' height='100%' fill='white'/>\n";
  f << "<line x1='" << px(0) << "' y1='" << py(0) << "' x2='" << px(1)
    << "' y2='" << py(0) << "' stroke='black'/>\n";
  f << "<line x1='" << px(0) << "' y1='" << py(0) << "' x2='" << px(0)
    << "' y2='" << py(1) << "' stroke='black'/>\n";
  f << "<text x='" << kW / 2 << "' y='20' text-anchor='middle'>" << title;
  if (curve.ap) f << " (AP " << fmt_double(*curve.ap) << ")";
  f << "</text>\n";
  f << "<text x='" << kW / 2 << "' y='" << kH - 8
    << "' text-anchor='middle'>recall</text>\n";
  if (!curve.points.empty()) {
    f << "<polyline fill='none' stroke='steelblue' stroke-width='1.5' points='";
    for (const auto& p : curve.points) {
      f << px(p.recall) << ',' << py(p.precision) << ' ';
    }
    f << "'/>\n";
  }
  f << "</svg>\n";
}

}  // namespace respcls
