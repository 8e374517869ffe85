#include "mthinker/eval.hpp"

#include <set>

#include <fmt/format.h>

#include "mthinker/error.hpp"
#include "mthinker/math_verifier.hpp"
#include "mthinker/response_parser.hpp"
#include "mthinker/reward.hpp"

namespace mthinker {

void to_json(nlohmann::json& j, const EvalRecord& r) {
  j = nlohmann::json{{"id", r.id},     {"lang", code(r.lang)}, {"subset", r.subset},
                     {"run", r.run},   {"lc", r.lc},           {"acc", r.acc},
                     {"lc_and_acc", r.lc_and_acc}};
  j["level"] = r.level ? nlohmann::json(*r.level) : nlohmann::json(nullptr);
}

EvalRecord eval_item(std::string_view response, Language lang, std::string_view gold,
                     const LanguageDetector& detector) {
  EvalRecord rec;
  rec.lang = lang;
  auto parsed = try_parse_response(response);
  if (const auto* p = std::get_if<ParsedResponse>(&parsed)) {
    rec.lc = lc_reward(*p, lang, detector) == 0;
    rec.acc = accuracy_reward(*p, gold) == 1;
  }
  rec.lc_and_acc = rec.lc && rec.acc;
  return rec;
}

double dw_acc(const std::array<double, 4>& a) {
  for (double v : a) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::out_of_range, fmt::format("level accuracy {} outside [0, 1]", v));
  }
  return (1.0 * a[0] + 2.0 * a[1] + 4.0 * a[2] + 8.0 * a[3]) / 15.0;
}

namespace {

struct Tally {
  std::size_t n = 0;
  std::size_t lc = 0;
  std::size_t acc = 0;
  std::size_t both = 0;

  void add(const EvalRecord& r) {
    ++n;
    lc += r.lc;
    acc += r.acc;
    both += r.lc_and_acc;
  }
};

double frac(std::size_t k, std::size_t n) { return static_cast<double>(k) / static_cast<double>(n); }

}  // namespace

MetricReport macro_metrics(std::span<const EvalRecord> records, std::size_t runs) {
  if (runs < 1) throw Error(Errc::invalid_argument, "runs must be >= 1");

  // lang -> run -> subset -> tally, and lang -> run -> level -> tally
  std::map<Language, std::vector<std::map<std::string, Tally>>> by_subset;
  std::map<Language, std::vector<std::map<int, Tally>>> by_level;
  std::map<Language, std::set<std::string>> subsets;
  std::map<Language, std::set<int>> levels;
  for (const auto& r : records) {
    if (r.subset.empty()) throw Error(Errc::empty_subset, fmt::format("record {} has no subset tag", r.id));
    if (r.run >= runs) throw Error(Errc::invalid_argument, fmt::format("record {} has run {} >= {}", r.id, r.run, runs));
    auto& s = by_subset[r.lang];
    s.resize(runs);
    s[r.run][r.subset].add(r);
    subsets[r.lang].insert(r.subset);
    if (r.level) {
      if (*r.level < 1 || *r.level > 4) throw Error(Errc::out_of_range, fmt::format("record {} level {}", r.id, *r.level));
      auto& l = by_level[r.lang];
      l.resize(runs);
      l[r.run][*r.level].add(r);
      levels[r.lang].insert(*r.level);
    }
  }

  MetricReport report;
  report.runs = runs;
  for (const auto& [lang, per_run] : by_subset) {
    LanguageMetrics m;
    for (std::size_t run = 0; run < runs; ++run) {
      double lc = 0.0;
      double acc = 0.0;
      double both = 0.0;
      for (const auto& subset : subsets[lang]) {
        const auto it = per_run[run].find(subset);
        if (it == per_run[run].end() || it->second.n == 0) {
          throw Error(Errc::empty_subset,
                      fmt::format("language {} run {} has no records for subset {}", code(lang), run, subset));
        }
        lc += frac(it->second.lc, it->second.n);
        acc += frac(it->second.acc, it->second.n);
        both += frac(it->second.both, it->second.n);
      }
      const auto k = static_cast<double>(subsets[lang].size());
      m.lc += 100.0 * lc / k;
      m.acc += 100.0 * acc / k;
      m.lc_and_acc += 100.0 * both / k;
    }
    m.lc /= static_cast<double>(runs);
    m.acc /= static_cast<double>(runs);
    m.lc_and_acc /= static_cast<double>(runs);

    if (const auto lv = by_level.find(lang); lv != by_level.end()) {
      std::array<double, 4> acc_levels{};
      std::array<double, 4> both_levels{};
      for (std::size_t run = 0; run < runs; ++run) {
        for (int level : levels[lang]) {
          const auto it = lv->second[run].find(level);
          if (it == lv->second[run].end() || it->second.n == 0) {
            throw Error(Errc::empty_subset,
                        fmt::format("language {} run {} has no records at level {}", code(lang), run, level));
          }
          acc_levels[level - 1] += frac(it->second.acc, it->second.n) / static_cast<double>(runs);
          both_levels[level - 1] += frac(it->second.both, it->second.n) / static_cast<double>(runs);
        }
      }
      m.level_acc = acc_levels;
      m.level_lc_and_acc = both_levels;
      m.dw_acc = 100.0 * dw_acc(acc_levels);
      m.lc_dw_acc = 100.0 * dw_acc(both_levels);
    }
    report.languages.emplace(lang, m);
  }

  if (!report.languages.empty()) {
    const auto n = static_cast<double>(report.languages.size());
    for (const auto& [lang, m] : report.languages) {
      report.average.lc += m.lc / n;
      report.average.acc += m.acc / n;
      report.average.lc_and_acc += m.lc_and_acc / n;
    }
  }
  return report;
}

namespace {

nlohmann::json metrics_json(const LanguageMetrics& m) {
  nlohmann::json j{{"lc", m.lc}, {"acc", m.acc}, {"lc_and_acc", m.lc_and_acc}};
  if (m.level_acc) j["level_acc"] = *m.level_acc;
  if (m.level_lc_and_acc) j["level_lc_and_acc"] = *m.level_lc_and_acc;
  if (m.dw_acc) j["dw_acc"] = *m.dw_acc;
  if (m.lc_dw_acc) j["lc_dw_acc"] = *m.lc_dw_acc;
  return j;
}

}  // namespace

void to_json(nlohmann::json& j, const MetricReport& r) {
  nlohmann::json langs = nlohmann::json::object();
  for (const auto& [lang, m] : r.languages) langs[std::string(code(lang))] = metrics_json(m);
  j = nlohmann::json{{"runs", r.runs}, {"languages", langs}, {"average", metrics_json(r.average)}};
}

}  // namespace mthinker
