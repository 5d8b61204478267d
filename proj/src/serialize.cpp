#include "stratawalk/serialize.hpp"

#include <charconv>
#include <cmath>

namespace stratawalk {

namespace {

void require_keys(const Json& obj, const std::string& ctx,
                  std::initializer_list<const char*> allowed,
                  std::initializer_list<const char*> required) {
  if (!obj.is_object()) throw ConfigError(ctx + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || (it.key() == a);
    if (!ok) throw ConfigError(ctx + ": unknown key '" + it.key() + "'");
  }
  for (const char* r : required)
    if (!obj.contains(r)) throw ConfigError(ctx + ": missing key '" + r + "'");
}

double get_num(const Json& obj, const std::string& ctx, const char* key) {
  if (!obj.at(key).is_number()) throw ConfigError(ctx + ": '" + key + "' must be a number");
  return obj.at(key).get<double>();
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

EnvironmentModel model_from_json(const Json& j) {
  require_keys(j, "environment",
               {"dimension", "eta", "ratio_law", "r_law", "drift_model", "seed"},
               {"eta", "ratio_law", "seed"});
  EnvironmentModel m;
  if (j.contains("dimension")) m.dimension = j.at("dimension").get<int>();
  m.eta = get_num(j, "environment", "eta");
  m.seed = j.at("seed").get<std::uint64_t>();

  {
    const Json& r = j.at("ratio_law");
    require_keys(r, "ratio_law", {"type", "a", "atoms", "a1", "a2", "w1"}, {"type"});
    const std::string type = r.at("type").get<std::string>();
    if (type == "constant") {
      m.ratio_law.kind = RatioLaw::Kind::Constant;
      m.ratio_law.a = get_num(r, "ratio_law", "a");
    } else if (type == "two_point") {
      m.ratio_law.kind = RatioLaw::Kind::TwoPoint;
      m.ratio_law.a = get_num(r, "ratio_law", "a");
    } else if (type == "log_symmetric") {
      m.ratio_law.kind = RatioLaw::Kind::LogSymmetric;
      if (!r.contains("atoms")) throw ConfigError("ratio_law.log_symmetric: missing atoms");
      for (const auto& atom : r.at("atoms")) {
        require_keys(atom, "ratio_law.atom", {"a", "weight"}, {"a", "weight"});
        m.ratio_law.atoms.emplace_back(atom.at("a").get<double>(),
                                       atom.at("weight").get<double>());
      }
    } else if (type == "biased_two_point") {
      m.ratio_law.kind = RatioLaw::Kind::BiasedTwoPoint;
      m.ratio_law.a1 = get_num(r, "ratio_law", "a1");
      m.ratio_law.a2 = get_num(r, "ratio_law", "a2");
      m.ratio_law.w1 = r.contains("w1") ? get_num(r, "ratio_law", "w1") : 0.5;
    } else {
      throw ConfigError("ratio_law: unknown type '" + type + "'");
    }
  }

  if (j.contains("r_law")) {
    const Json& r = j.at("r_law");
    require_keys(r, "r_law", {"type", "value", "lo", "hi"}, {"type"});
    const std::string type = r.at("type").get<std::string>();
    if (type == "constant") {
      m.r_law.kind = RLaw::Kind::Constant;
      m.r_law.value = get_num(r, "r_law", "value");
    } else if (type == "uniform") {
      m.r_law.kind = RLaw::Kind::Uniform;
      m.r_law.lo = get_num(r, "r_law", "lo");
      m.r_law.hi = get_num(r, "r_law", "hi");
    } else {
      throw ConfigError("r_law: unknown type '" + type + "'");
    }
  }

  if (j.contains("drift_model")) {
    const Json& d = j.at("drift_model");
    require_keys(d, "drift_model", {"type", "c", "alpha", "delta", "sign_pattern"}, {"type"});
    const std::string type = d.at("type").get<std::string>();
    if (type == "zero") {
      m.drift_model.kind = DriftModel::Kind::Zero;
    } else if (type == "constant") {
      m.drift_model.kind = DriftModel::Kind::Constant;
      m.drift_model.c = get_num(d, "drift_model", "c");
    } else if (type == "stretch_exp") {
      m.drift_model.kind = DriftModel::Kind::StretchExp;
      m.drift_model.c = get_num(d, "drift_model", "c");
      m.drift_model.alpha = get_num(d, "drift_model", "alpha");
      if (d.contains("sign_pattern")) {
        const std::string sp = d.at("sign_pattern").get<std::string>();
        if (sp == "positive")
          m.drift_model.sign_pattern = DriftModel::SignPattern::Positive;
        else if (sp == "alternating")
          m.drift_model.sign_pattern = DriftModel::SignPattern::Alternating;
        else if (sp == "antisymmetric")
          m.drift_model.sign_pattern = DriftModel::SignPattern::Antisymmetric;
        else
          throw ConfigError("drift_model: unknown sign_pattern '" + sp + "'");
      }
    } else if (type == "iid_uniform" || type == "iid_two_point") {
      m.drift_model.kind = type == "iid_uniform" ? DriftModel::Kind::IidUniform
                                                 : DriftModel::Kind::IidTwoPoint;
      m.drift_model.c = get_num(d, "drift_model", "c");
      m.drift_model.delta = get_num(d, "drift_model", "delta");
    } else {
      throw ConfigError("drift_model: unknown type '" + type + "'");
    }
  }
  return m;
}

Json model_to_json(const EnvironmentModel& m) {
  Json j;
  j["dimension"] = m.dimension;
  j["eta"] = m.eta;
  switch (m.ratio_law.kind) {
    case RatioLaw::Kind::Constant:
      j["ratio_law"] = {{"type", "constant"}, {"a", m.ratio_law.a}};
      break;
    case RatioLaw::Kind::TwoPoint:
      j["ratio_law"] = {{"type", "two_point"}, {"a", m.ratio_law.a}};
      break;
    case RatioLaw::Kind::LogSymmetric: {
      Json atoms = Json::array();
      for (const auto& [v, w] : m.ratio_law.atoms)
        atoms.push_back({{"a", v}, {"weight", w}});
      j["ratio_law"] = {{"type", "log_symmetric"}, {"atoms", atoms}};
      break;
    }
    case RatioLaw::Kind::BiasedTwoPoint:
      j["ratio_law"] = {{"type", "biased_two_point"},
                        {"a1", m.ratio_law.a1},
                        {"a2", m.ratio_law.a2},
                        {"w1", m.ratio_law.w1}};
      break;
  }
  if (m.r_law.kind == RLaw::Kind::Constant)
    j["r_law"] = {{"type", "constant"}, {"value", m.r_law.value}};
  else
    j["r_law"] = {{"type", "uniform"}, {"lo", m.r_law.lo}, {"hi", m.r_law.hi}};
  switch (m.drift_model.kind) {
    case DriftModel::Kind::Zero:
      j["drift_model"] = {{"type", "zero"}};
      break;
    case DriftModel::Kind::Constant:
      j["drift_model"] = {{"type", "constant"}, {"c", m.drift_model.c}};
      break;
    case DriftModel::Kind::StretchExp: {
      const char* sp = m.drift_model.sign_pattern == DriftModel::SignPattern::Positive
                           ? "positive"
                           : m.drift_model.sign_pattern == DriftModel::SignPattern::Alternating
                                 ? "alternating"
                                 : "antisymmetric";
      j["drift_model"] = {{"type", "stretch_exp"},
                          {"c", m.drift_model.c},
                          {"alpha", m.drift_model.alpha},
                          {"sign_pattern", sp}};
      break;
    }
    case DriftModel::Kind::IidUniform:
      j["drift_model"] = {
          {"type", "iid_uniform"}, {"c", m.drift_model.c}, {"delta", m.drift_model.delta}};
      break;
    case DriftModel::Kind::IidTwoPoint:
      j["drift_model"] = {
          {"type", "iid_two_point"}, {"c", m.drift_model.c}, {"delta", m.drift_model.delta}};
      break;
  }
  j["seed"] = m.seed;
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  require_keys(j, "config", {"environment", "analysis", "simulation", "sweep", "output"},
               {"environment"});
  ExperimentConfig c;
  c.environment = model_from_json(j.at("environment"));

  if (j.contains("analysis")) {
    const Json& a = j.at("analysis");
    require_keys(a, "analysis", {"window", "grid", "thresholds", "structure_epsilon"}, {});
    if (a.contains("window")) {
      require_keys(a.at("window"), "analysis.window", {"n_minus", "n_plus"},
                   {"n_minus", "n_plus"});
      c.analysis.n_minus = a.at("window").at("n_minus").get<std::int64_t>();
      c.analysis.n_plus = a.at("window").at("n_plus").get<std::int64_t>();
    }
    if (a.contains("grid")) {
      require_keys(a.at("grid"), "analysis.grid", {"K", "j_max"}, {});
      if (a.at("grid").contains("K")) c.analysis.grid.K = a.at("grid").at("K").get<int>();
      if (a.at("grid").contains("j_max"))
        c.analysis.grid.j_max = a.at("grid").at("j_max").get<int>();
    }
    if (a.contains("thresholds")) {
      const Json& t = a.at("thresholds");
      require_keys(t, "analysis.thresholds", {"theta_trans", "theta_rec", "fit_se_max"}, {});
      if (t.contains("theta_trans"))
        c.analysis.thresholds.theta_trans = t.at("theta_trans").get<double>();
      if (t.contains("theta_rec")) c.analysis.thresholds.theta_rec = t.at("theta_rec").get<double>();
      if (t.contains("fit_se_max"))
        c.analysis.thresholds.fit_se_max = t.at("fit_se_max").get<double>();
    }
    if (a.contains("structure_epsilon"))
      c.analysis.structure_epsilon = a.at("structure_epsilon").get<double>();
  }

  if (j.contains("simulation")) {
    const Json& s = j.at("simulation");
    require_keys(s, "simulation",
                 {"num_walks", "steps", "record_trace", "mode", "base_seed"}, {});
    if (s.contains("num_walks")) c.simulation.num_walks = s.at("num_walks").get<std::int64_t>();
    if (s.contains("steps")) c.simulation.steps = s.at("steps").get<std::int64_t>();
    if (s.contains("record_trace")) c.simulation.record_trace = s.at("record_trace").get<bool>();
    if (s.contains("base_seed")) c.simulation.base_seed = s.at("base_seed").get<std::uint64_t>();
    if (s.contains("mode")) {
      const std::string mode = s.at("mode").get<std::string>();
      if (mode == "full")
        c.simulation.vertical_only = false;
      else if (mode == "vertical")
        c.simulation.vertical_only = true;
      else
        throw ConfigError("simulation.mode must be 'full' or 'vertical'");
    }
  }

  if (j.contains("sweep")) {
    const Json& s = j.at("sweep");
    require_keys(s, "sweep", {"alpha_grid", "env_seeds", "with_simulation"}, {});
    if (s.contains("alpha_grid"))
      for (const auto& a : s.at("alpha_grid")) c.sweep.alpha_grid.push_back(a.get<double>());
    if (s.contains("env_seeds"))
      for (const auto& a : s.at("env_seeds"))
        c.sweep.env_seeds.push_back(a.get<std::uint64_t>());
    if (s.contains("with_simulation")) c.sweep.with_simulation = s.at("with_simulation").get<bool>();
  }

  if (j.contains("output")) {
    const Json& o = j.at("output");
    require_keys(o, "output", {"directory", "formats"}, {});
    if (o.contains("directory")) c.output.directory = o.at("directory").get<std::string>();
    if (o.contains("formats")) {
      c.output.write_csv = false;
      c.output.write_json = false;
      for (const auto& f : o.at("formats")) {
        const std::string fmt = f.get<std::string>();
        if (fmt == "csv")
          c.output.write_csv = true;
        else if (fmt == "json")
          c.output.write_json = true;
        else
          throw ConfigError("output.formats: unknown format '" + fmt + "'");
      }
    }
  }
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["environment"] = model_to_json(c.environment);
  j["analysis"] = {
      {"window", {{"n_minus", c.analysis.n_minus}, {"n_plus", c.analysis.n_plus}}},
      {"grid", {{"K", c.analysis.grid.K}, {"j_max", c.analysis.grid.j_max}}},
      {"thresholds",
       {{"theta_trans", c.analysis.thresholds.theta_trans},
        {"theta_rec", c.analysis.thresholds.theta_rec},
        {"fit_se_max", c.analysis.thresholds.fit_se_max}}},
      {"structure_epsilon", c.analysis.structure_epsilon}};
  j["simulation"] = {{"num_walks", c.simulation.num_walks},
                     {"steps", c.simulation.steps},
                     {"record_trace", c.simulation.record_trace},
                     {"mode", c.simulation.vertical_only ? "vertical" : "full"},
                     {"base_seed", c.simulation.base_seed}};
  j["sweep"] = {{"alpha_grid", c.sweep.alpha_grid},
                {"env_seeds", c.sweep.env_seeds},
                {"with_simulation", c.sweep.with_simulation}};
  Json formats = Json::array();
  if (c.output.write_csv) formats.push_back("csv");
  if (c.output.write_json) formats.push_back("json");
  j["output"] = {{"directory", c.output.directory}, {"formats", formats}};
  return j;
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string dump = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

Json signed_log_to_json(const SignedLog& v) {
  return Json{{"sign", v.sgn}, {"log10", v.sgn == 0 ? 0.0 : v.log10_mag()}};
}

Json report_to_json(const CriterionReport& rep) {
  Json j;
  j["kind"] = to_string(rep.kind);
  j["grid"] = {{"K", rep.grid.K}, {"j_max", rep.grid.j_max}};
  Json terms = Json::array();
  for (const auto& t : rep.terms) {
    Json jt;
    jt["j"] = t.j;
    jt["n_log10"] = t.n.log10_mag();
    jt["term"] = signed_log_to_json(t.value);
    terms.push_back(jt);
  }
  j["terms"] = terms;
  Json sums = Json::array();
  for (const auto& s : rep.partial_sums) sums.push_back(signed_log_to_json(s));
  j["partial_sums"] = sums;
  j["fit"] = {{"ratio", rep.fit.ratio},
              {"se", rep.fit.se},
              {"points", rep.fit.points},
              {"valid", rep.fit.valid}};
  j["convergent"] = rep.convergent;
  j["divergent"] = rep.divergent;
  j["verdict"] = to_string(rep.verdict);
  j["thresholds"] = {{"theta_trans", rep.thresholds.theta_trans},
                     {"theta_rec", rep.thresholds.theta_rec},
                     {"fit_se_max", rep.thresholds.fit_se_max}};
  j["notes"] = rep.notes;
  return j;
}

Json validation_to_json(const ValidationReport& rep, const EnvStats& stats) {
  Json j;
  j["range"] = {{"n_lo", rep.n_lo}, {"n_hi", rep.n_hi}};
  j["levels_checked"] = rep.levels_checked;
  j["ok"] = rep.ok();
  Json v = Json::array();
  for (const auto& viol : rep.violations)
    v.push_back({{"n", viol.n}, {"check", viol.check}, {"detail", viol.detail}});
  j["violations"] = v;
  j["stats"] = {{"mean_log_a", stats.mean_log_a},
                {"var_log_a", stats.var_log_a},
                {"min_pqr", stats.min_pqr},
                {"max_support", stats.max_support}};
  return j;
}

Json ensemble_to_json(const EnsembleResult& ens, bool with_excursions) {
  Json j;
  j["env_seed"] = ens.env_seed;
  j["base_seed"] = ens.base_seed;
  j["mode"] = ens.vertical_only ? "vertical" : "full";
  j["num_walks"] = ens.walks.size();
  j["steps"] = ens.steps;
  auto qj = [](const std::vector<std::int64_t>& q) {
    return Json{{"min", q[0]}, {"q25", q[1]}, {"median", q[2]}, {"q75", q[3]}, {"max", q[4]}};
  };
  j["quantiles"] = {{"returns_origin", qj(ens.quantiles.returns_origin)},
                    {"returns_vertical", qj(ens.quantiles.returns_vertical)},
                    {"max_abs_v", qj(ens.quantiles.max_abs_v)},
                    {"abs_final_h", qj(ens.quantiles.abs_final_h)}};
  Json curve = Json::array();
  for (std::size_t i = 0; i < ens.checkpoints.size(); ++i)
    curve.push_back({{"t", ens.checkpoints[i]}, {"mean_returns", ens.return_curve[i]}});
  j["return_curve"] = curve;
  Json seeds = Json::array();
  for (const auto& w : ens.walks) seeds.push_back(w.walk_seed);
  j["walk_seeds"] = seeds;
  if (with_excursions) {
    const ExcursionSummary sum = excursion_summary(ens);
    Json hist = Json::array();
    for (const auto& [d, c] : sum.histogram) hist.push_back({{"D", d}, {"count", c}});
    j["excursions"] = {{"pooled_count", sum.pooled_count},
                       {"low_power", sum.low_power},
                       {"sign_balance", sum.sign_balance},
                       {"mean_D", sum.mean_D},
                       {"se_mean_D", sum.se_mean_D},
                       {"ks_eligible_walks", sum.ks_eligible_walks},
                       {"ks_passing_walks", sum.ks_passing_walks},
                       {"sigma_gap_quantiles", sum.sigma_gap_quantiles},
                       {"histogram", hist}};
  }
  return j;
}

std::string provenance_line(const ExperimentConfig& c) {
  return "# config_hash=" + config_hash(c) +
         " env_seed=" + std::to_string(c.environment.seed) +
         " base_seed=" + std::to_string(c.simulation.base_seed);
}

namespace {

std::string join_intvec(const IntVec& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace

std::string window_csv(const EnvironmentView& env, std::int64_t n_lo, std::int64_t n_hi,
                       const std::string& provenance) {
  std::string out = provenance + "\n";
  out += "n,p,q,r,eps,mu_atoms\n";
  for (std::int64_t n = n_lo; n <= n_hi; ++n) {
    const Stratum s = env.stratum(n);
    out += std::to_string(n) + ',' + format_double(s.p) + ',' + format_double(s.q) + ',' +
           format_double(s.r) + ',';
    for (std::size_t i = 0; i < s.eps.size(); ++i) {
      if (i) out += ' ';
      out += format_double(s.eps[i]);
    }
    out += ',';
    for (std::size_t i = 0; i < s.mu.atoms.size(); ++i) {
      if (i) out += ';';
      out += join_intvec(s.mu.atoms[i].offset) + ':' + format_double(s.mu.atoms[i].weight);
    }
    out += '\n';
  }
  return out;
}

namespace {

std::string sl_fields(const SignedLog& v) {
  return std::to_string(v.sgn) + ',' + format_double(v.sgn == 0 ? 0.0 : v.log10_mag());
}

}  // namespace

std::string series_csv(const PotentialTables& t, const CriterionReport& rec,
                       const CriterionReport& trans, const std::string& provenance) {
  std::string out = provenance + "\n";
  out +=
      "j,n_log10,phi_sign,phi_log10,phi_plus_sign,phi_plus_log10,phi_str_sign,phi_str_log10,"
      "term_recurrence_sign,term_recurrence_log10,term_transience_sign,term_transience_log10,"
      "partial_sum_recurrence_sign,partial_sum_recurrence_log10,"
      "partial_sum_transience_sign,partial_sum_transience_log10\n";
  const int jmax = std::max(rec.terms.empty() ? 0 : rec.terms.back().j,
                            trans.terms.empty() ? 0 : trans.terms.back().j);
  const double logk = std::log(double(rec.grid.K));
  for (int j = 1; j <= jmax; ++j) {
    const SignedLog x = SignedLog::from_log(+1, j * logk);
    out += std::to_string(j) + ',' + format_double(x.log10_mag());
    try {
      out += ',' + sl_fields(phi_sym(t, x));
      out += ',' + sl_fields(phi_plus(t, x));
      out += ',' + sl_fields(phi_str(t, x));
    } catch (const OutOfWindowError&) {
      out += ",,,,,,";
    }
    auto term_at = [j](const CriterionReport& r, bool sums) -> std::string {
      for (std::size_t i = 0; i < r.terms.size(); ++i)
        if (r.terms[i].j == j) return sl_fields(sums ? r.partial_sums[i] : r.terms[i].value);
      return ",";
    };
    out += ',' + term_at(rec, false) + ',' + term_at(trans, false) + ',' + term_at(rec, true) +
           ',' + term_at(trans, true);
    out += '\n';
  }
  return out;
}

std::string phi_table_csv(const PotentialTables& t, GridSpec grid,
                          const std::string& provenance) {
  GridSpec g = resolve_grid(t, grid);
  std::string out = provenance + "\n";
  out +=
      "j,n_log10,phi_sign,phi_log10,phi_plus_sign,phi_plus_log10,phi_str_sign,phi_str_log10,"
      "psi_sign,psi_log10,phi_inv_log10,phi_plus_inv_log10,phi_str_inv_log10\n";
  const double logk = std::log(double(g.K));
  for (int j = 1; j <= g.j_max; ++j) {
    const SignedLog x = SignedLog::from_log(+1, j * logk);
    std::string row = std::to_string(j) + ',' + format_double(x.log10_mag());
    try {
      row += ',' + sl_fields(phi_sym(t, x));
      row += ',' + sl_fields(phi_plus(t, x));
      row += ',' + sl_fields(phi_str(t, x));
      row += ',' + sl_fields(psi(t, x));
    } catch (const OutOfWindowError&) {
      break;
    }
    auto inv = [&](PhiKind k) -> std::string {
      try {
        return format_double(phi_inverse(t, x, k).log10_mag());
      } catch (const OutOfWindowError&) {
        return "";
      } catch (const std::domain_error&) {
        return "";
      }
    };
    row += ',' + inv(PhiKind::Phi) + ',' + inv(PhiKind::PhiPlus) + ',' + inv(PhiKind::PhiStr);
    out += row + '\n';
  }
  return out;
}

std::string ensemble_csv(const EnsembleResult& ens, const std::string& provenance) {
  std::string out = provenance + "\n";
  out += "walk_seed,returns_origin,returns_vertical,last_return_t,max_abs_v,final_h,final_v\n";
  for (const auto& w : ens.walks) {
    std::string h;
    for (std::size_t i = 0; i < w.final_h.size(); ++i) {
      if (i) h += ';';
      h += std::to_string(w.final_h[i]);
    }
    out += std::to_string(w.walk_seed) + ',' + std::to_string(w.returns_origin) + ',' +
           std::to_string(w.returns_vertical) + ',' + std::to_string(w.last_return_t) + ',' +
           std::to_string(w.max_abs_v) + ',' + h + ',' + std::to_string(w.final_v) + '\n';
  }
  return out;
}

}  // namespace stratawalk
