#include "vceval/metaeval.hpp"

namespace vceval {

std::string to_string(Methodology m) {
  switch (m) {
    case Methodology::video_level: return "video_level";
    case Methodology::target_level: return "target_level";
    case Methodology::pairwise: return "pairwise";
  }
  return "unknown";
}

std::string to_string(PairOutcome o) {
  switch (o) {
    case PairOutcome::a_wins: return "a_wins";
    case PairOutcome::b_wins: return "b_wins";
    case PairOutcome::tie: return "tie";
  }
  return "unknown";
}

namespace {

void check_paired(const PairedScores& s) {
  if (s.automatic.size() != s.human.size() || s.labels.size() != s.human.size()) {
    throw Error(ErrorCode::LengthMismatch, "paired scores have unequal lengths");
  }
}

}  // namespace

MetaReport meta_video_level(const PairedScores& per_video) {
  check_paired(per_video);
  MetaReport report{.methodology = Methodology::video_level};
  report.pearson = pearson(per_video.automatic, per_video.human);
  report.spearman = spearman(per_video.automatic, per_video.human);
  report.n_units = per_video.labels.size();
  return report;
}

MetaReport meta_target_level(std::span<const PairedScores> per_target) {
  MetaReport report{.methodology = Methodology::target_level};
  double sum_p = 0.0, sum_s = 0.0;
  for (const auto& t : per_target) {
    check_paired(t);
    try {
      const double p = pearson(t.automatic, t.human);
      const double s = spearman(t.automatic, t.human);
      sum_p += p;
      sum_s += s;
      ++report.n_units;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateInput) throw;
      ++report.skipped_degenerate;
    }
  }
  if (report.n_units == 0) throw Error(ErrorCode::NoValidTargets, "every target was degenerate");
  report.pearson = sum_p / static_cast<double>(report.n_units);
  report.spearman = sum_s / static_cast<double>(report.n_units);
  return report;
}

PairedScores sum_over_targets(const std::map<std::string, std::map<std::string, double>>& automatic,
                              const std::map<std::string, std::map<std::string, double>>& human) {
  PairedScores out;
  for (const auto& [label, auto_targets] : automatic) {
    const auto h = human.find(label);
    if (h == human.end()) continue;
    double a_sum = 0.0, h_sum = 0.0;
    std::size_t common = 0;
    for (const auto& [target, score] : auto_targets) {
      if (const auto ht = h->second.find(target); ht != h->second.end()) {
        a_sum += score;
        h_sum += ht->second;
        ++common;
      }
    }
    if (common == 0) continue;
    out.labels.push_back(label);
    out.automatic.push_back(a_sum);
    out.human.push_back(h_sum);
  }
  return out;
}

double pairwise_accuracy(std::span<const PairOutcome> predicted, std::span<const PairOutcome> human) {
  if (predicted.size() != human.size() || predicted.empty()) {
    throw Error(ErrorCode::LengthMismatch, "pairwise accuracy needs equal, non-empty outcome lists");
  }
  double credit = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (human[i] == PairOutcome::tie) {
      throw Error(ErrorCode::InvariantViolation, "human pairwise outcomes must not contain ties");
    }
    if (predicted[i] == PairOutcome::tie) credit += 0.5;
    else if (predicted[i] == human[i]) credit += 1.0;
  }
  return credit / static_cast<double>(predicted.size());
}

}  // namespace vceval
