#include "stepplan/curation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "stepplan/error.hpp"

namespace stepplan {

std::string_view to_string(TupleKind kind) {
  switch (kind) {
    case TupleKind::plan: return "plan";
    case TupleKind::condition: return "condition";
    case TupleKind::counterfactual: return "counterfactual";
  }
  return "plan";
}

TupleKind tuple_kind_from_string(std::string_view text) {
  if (text == "plan") return TupleKind::plan;
  if (text == "condition") return TupleKind::condition;
  if (text == "counterfactual") return TupleKind::counterfactual;
  throw ValidationError("unknown tuple kind \"" + std::string(text) + "\"");
}

std::string_view to_string(Decision decision) {
  switch (decision) {
    case Decision::accepted: return "accepted";
    case Decision::rejected: return "rejected";
    case Decision::pending: return "pending";
  }
  return "pending";
}

CurationRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("curation record must be an object");
  CurationRecord r;
  if (j.contains("id")) r.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
  if (!j.contains("tuple_kind")) throw ValidationError("curation record is missing \"tuple_kind\"");
  r.tuple_kind = tuple_kind_from_string(j["tuple_kind"].get<std::string>());
  r.payload = j.value("payload", nlohmann::json::object());
  if (j.contains("critic_score") && j["critic_score"].is_number()) r.critic_score = j["critic_score"].get<double>();
  if (j.contains("label") && j["label"].is_boolean()) r.gold_label = j["label"].get<bool>();
  return r;
}

nlohmann::json to_json(const CurationRecord& r) {
  nlohmann::json out = {{"id", r.id}, {"tuple_kind", to_string(r.tuple_kind)}, {"payload", r.payload}};
  out["critic_score"] = r.critic_score ? nlohmann::json(*r.critic_score) : nlohmann::json(nullptr);
  if (r.gold_label) out["label"] = *r.gold_label;
  out["decision"] = to_string(r.decision);
  if (!r.diagnostic.empty()) out["diagnostic"] = r.diagnostic;
  return out;
}

double ThresholdPolicy::threshold(TupleKind kind) const {
  switch (kind) {
    case TupleKind::plan: return plan;
    case TupleKind::condition: return condition;
    case TupleKind::counterfactual: return counterfactual;
  }
  return plan;
}

void ThresholdPolicy::validate() const {
  for (double t : {plan, condition, counterfactual})
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("thresholds must lie in [0, 1]");
}

Partition curate(const std::vector<CurationRecord>& records, const ThresholdPolicy& policy) {
  policy.validate();
  Partition out;
  for (auto r : records) {
    if (!r.critic_score) {
      r.decision = Decision::pending;
      r.diagnostic = "missing critic_score";
      out.pending.push_back(std::move(r));
      continue;
    }
    const double s = *r.critic_score;
    if (!(s >= 0.0 && s <= 1.0)) {
      r.decision = Decision::pending;
      r.diagnostic = "critic_score outside [0, 1]";
      out.pending.push_back(std::move(r));
      continue;
    }
    r.decision = s >= policy.threshold(r.tuple_kind) ? Decision::accepted : Decision::rejected;
    (r.decision == Decision::accepted ? out.accepted : out.rejected).push_back(std::move(r));
  }
  return out;
}

std::vector<PrPoint> pr_curve(const std::vector<ScoredLabel>& scored, const std::vector<double>& thresholds) {
  if (scored.empty()) throw ValidationError("pr_curve needs at least one scored record");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::size_t positives = 0;
  for (const auto& s : scored) positives += s.positive ? 1 : 0;

  std::vector<PrPoint> out;
  out.reserve(thresholds.size());
  for (double tau : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (const auto& s : scored) {
      if (s.score < tau) continue;
      (s.positive ? tp : fp) += 1;
    }
    PrPoint p;
    p.tau = tau;
    p.accepted = tp + fp;
    p.precision = p.accepted ? static_cast<double>(tp) / static_cast<double>(p.accepted) : nan;
    p.recall = positives ? static_cast<double>(tp) / static_cast<double>(positives) : nan;
    out.push_back(p);
  }
  return out;
}

std::vector<double> distinct_score_thresholds(const std::vector<ScoredLabel>& scored) {
  std::vector<double> out;
  out.reserve(scored.size());
  for (const auto& s : scored) out.push_back(s.score);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string pr_report(const std::vector<PrPoint>& curve) {
  auto fmt = [](double v) {
    if (std::isnan(v)) return std::string("nan");
    std::ostringstream os;
    os.precision(6);
    os << std::fixed << v;
    return os.str();
  };
  std::string out = "tau\tprecision\trecall\taccepted\n";
  for (const auto& p : curve)
    out += fmt(p.tau) + "\t" + fmt(p.precision) + "\t" + fmt(p.recall) + "\t" + std::to_string(p.accepted) + "\n";
  return out;
}

double AnnotationBundle::mean(Dimension d) const {
  const auto& r = ratings[static_cast<std::size_t>(d)];
  double sum = 0.0;
  for (int v : r) sum += v;
  return sum / static_cast<double>(kAnnotators);
}

int binarize_likert(std::string_view answer) {
  std::string a;
  for (char c : answer) a += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (a == "definitely" || a == "mostly" || a == "somewhat") return 1;
  if (a == "hardly" || a == "not at all") return 0;
  throw ValidationError("unknown Likert answer \"" + std::string(answer) + "\"");
}

bool aggregate_plan_validity(const AnnotationBundle& bundle) {
  for (const auto& dim : bundle.ratings)
    for (int v : dim)
      if (v != 0 && v != 1) throw ValidationError("ratings must be binarized to 0 or 1");
  return bundle.mean(Dimension::achievability) > 0.25 && bundle.mean(Dimension::topicality) > 0.25 &&
         bundle.mean(Dimension::ordering) > 0.25 && bundle.mean(Dimension::completeness) >= 0.65;
}

}  // namespace stepplan
