#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "nutaxis/config.hpp"
#include "nutaxis/csv.hpp"
#include "nutaxis/diagnostics.hpp"
#include "nutaxis/model.hpp"

namespace nutaxis {

using json = nlohmann::json;

inline json to_json(const ModelParams& p) {
    return json{{"m", p.m},   {"chi", p.chi}, {"xi", p.xi},
                {"rho", p.rho}, {"mu", p.mu},   {"eps_reg", p.eps_reg}};
}

inline ModelParams model_from_json(const json& j) {
    ModelParams p;
    p.m = j.at("m").get<double>();
    p.chi = j.at("chi").get<double>();
    p.xi = j.at("xi").get<double>();
    p.rho = j.at("rho").get<double>();
    p.mu = j.at("mu").get<double>();
    p.eps_reg = j.at("eps_reg").get<double>();
    return p;
}

inline json to_json(const EquilibriumPrediction& pred) {
    json j;
    if (pred.u_limit) j["u_limit"] = *pred.u_limit;
    if (std::holds_alternative<double>(pred.v_limit))
        j["v_limit"] = std::get<double>(pred.v_limit);
    else {
        const auto iv = std::get<ValueInterval>(pred.v_limit);
        j["v_limit_interval"] = {iv.lo, iv.hi};
    }
    if (pred.decay_rate_lower_bound) j["decay_rate_lower_bound"] = *pred.decay_rate_lower_bound;
    return j;
}

inline EquilibriumPrediction prediction_from_json(const json& j) {
    EquilibriumPrediction pred;
    if (j.contains("u_limit")) pred.u_limit = j.at("u_limit").get<double>();
    if (j.contains("v_limit"))
        pred.v_limit = j.at("v_limit").get<double>();
    else if (j.contains("v_limit_interval"))
        pred.v_limit = ValueInterval{j.at("v_limit_interval").at(0).get<double>(),
                                     j.at("v_limit_interval").at(1).get<double>()};
    if (j.contains("decay_rate_lower_bound"))
        pred.decay_rate_lower_bound = j.at("decay_rate_lower_bound").get<double>();
    return pred;
}

// Stepping-loop health counters; produced by the run itself and carried in
// run_meta.json, since they cannot be rederived from series.csv.
struct StepHealth {
    std::int64_t steps = 0;
    std::int64_t dt_retries = 0;
    double worst_pre_clamp_u_rel = 0.0;
    double worst_pre_clamp_v_rel = 0.0;
    std::int64_t clamped_cells = 0;
    std::int64_t floored_cells_max = 0;
};

inline StepHealth health_of(const DiagnosticsRecord& rec) {
    StepHealth h;
    h.steps = rec.steps;
    h.dt_retries = rec.dt_retries;
    h.worst_pre_clamp_u_rel = rec.worst_pre_clamp_u_rel;
    h.worst_pre_clamp_v_rel = rec.worst_pre_clamp_v_rel;
    h.clamped_cells = rec.clamped_cells;
    h.floored_cells_max = rec.floored_cells_max;
    return h;
}

// Everything diagnose needs to recompute verdicts from series.csv.
struct RunMeta {
    ModelParams model;
    GridSpec grid;
    std::optional<EquilibriumPrediction> prediction;
    Regime regime = Regime::CaseI;
    bool m_in_proven_range = true;
    double tail_fraction = 0.25;
    StepHealth health;
};

inline void write_run_meta(const std::filesystem::path& path, const RunMeta& meta) {
    json j;
    j["model"] = to_json(meta.model);
    j["grid"] = {{"dim", meta.grid.dim}, {"cells", meta.grid.cells}, {"lengths", meta.grid.lengths}};
    j["regime"] = to_string(meta.regime);
    j["m_in_proven_range"] = meta.m_in_proven_range;
    j["tail_fraction"] = meta.tail_fraction;
    j["health"] = {{"steps", meta.health.steps},
                   {"dt_retries", meta.health.dt_retries},
                   {"worst_pre_clamp_u_rel", meta.health.worst_pre_clamp_u_rel},
                   {"worst_pre_clamp_v_rel", meta.health.worst_pre_clamp_v_rel},
                   {"clamped_cells", meta.health.clamped_cells},
                   {"floored_cells_max", meta.health.floored_cells_max}};
    if (meta.prediction) j["prediction"] = to_json(*meta.prediction);
    atomic_write_bytes(path, j.dump(2) + "\n");
}

inline RunMeta read_run_meta(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SnapshotError(SnapshotError::Kind::Io, "cannot open " + path.string());
    json j = json::parse(in);
    RunMeta meta;
    meta.model = model_from_json(j.at("model"));
    meta.grid.dim = j.at("grid").at("dim").get<int>();
    meta.grid.cells = j.at("grid").at("cells").get<std::vector<index_t>>();
    meta.grid.lengths = j.at("grid").at("lengths").get<std::vector<double>>();
    const std::string reg = j.at("regime").get<std::string>();
    meta.regime = reg == "CaseII" ? Regime::CaseII : (reg == "CaseIII" ? Regime::CaseIII : Regime::CaseI);
    meta.m_in_proven_range = j.at("m_in_proven_range").get<bool>();
    meta.tail_fraction = j.at("tail_fraction").get<double>();
    if (j.contains("health")) {
        const json& h = j.at("health");
        meta.health.steps = h.value("steps", std::int64_t{0});
        meta.health.dt_retries = h.value("dt_retries", std::int64_t{0});
        meta.health.worst_pre_clamp_u_rel = h.value("worst_pre_clamp_u_rel", 0.0);
        meta.health.worst_pre_clamp_v_rel = h.value("worst_pre_clamp_v_rel", 0.0);
        meta.health.clamped_cells = h.value("clamped_cells", std::int64_t{0});
        meta.health.floored_cells_max = h.value("floored_cells_max", std::int64_t{0});
    }
    if (j.contains("prediction")) meta.prediction = prediction_from_json(j.at("prediction"));
    return meta;
}

// Assembles the per-run verdict report: mass identities, convergence against
// the predicted limit, boundedness, energy regression, decay-rate fit and the
// positivity excursion summary.
inline json build_verdicts(const DiagnosticsRecord& rec, const RunMeta& meta,
                           const ConvergenceTolerances& tol = {}) {
    json j;
    j["samples"] = rec.size();
    j["steps"] = meta.health.steps;
    j["dt_retries"] = meta.health.dt_retries;
    if (rec.size() > 0) j["t_final"] = rec.times.back();

    const MassReport mass = mass_identities(rec, meta.model);
    j["mass"] = {{"conservation_applies", mass.conservation_applies},
                 {"max_rel_drift", mass.max_rel_drift},
                 {"a_monotone_applies", mass.a_monotone_applies},
                 {"max_a_decrease", mass.max_a_decrease},
                 {"b_monotone_applies", mass.b_monotone_applies},
                 {"max_b_increase", mass.max_b_increase}};

    const BoundednessReport bound = boundedness_monitor(rec);
    j["boundedness"] = {{"max_u_linf", bound.max_u_linf},
                        {"max_v_linf", bound.max_v_linf},
                        {"max_grad_v_linf", bound.max_grad_v_linf},
                        {"growth_flag", bound.growth_flag()}};

    const double v0_linf = rec.size() > 0 ? rec.v_linf.front() : 0.0;
    j["comparison_bound"] = {{"limit", std::max(1.0, v0_linf)},
                             {"max_v_linf", bound.max_v_linf},
                             {"holds", bound.max_v_linf <= std::max(1.0, v0_linf) + 1e-9}};

    j["positivity"] = {{"worst_pre_clamp_u_rel", meta.health.worst_pre_clamp_u_rel},
                       {"worst_pre_clamp_v_rel", meta.health.worst_pre_clamp_v_rel},
                       {"clamped_cells", meta.health.clamped_cells},
                       {"within_tolerance", meta.health.worst_pre_clamp_u_rel <= kNegativityTol &&
                                                meta.health.worst_pre_clamp_v_rel <= kNegativityTol}};

    double volume = 1.0;
    for (double len : meta.grid.lengths) volume *= len;
    const EnergyRegression ereg = energy_regression(rec, meta.model.chi, volume);
    j["energy"] = {{"early_max", ereg.early_max},
                   {"overall_max", ereg.overall_max},
                   {"margin", ereg.margin},
                   {"bounded", ereg.within}};

    j["regime"] = to_string(meta.regime);
    j["m_in_proven_range"] = meta.m_in_proven_range;

    if (meta.prediction) {
        const ConvergenceVerdict verdict =
            convergence_check(rec, *meta.prediction, meta.tail_fraction, tol);
        json cv;
        cv["status"] = to_string(verdict.status);
        cv["detail"] = verdict.detail;
        if (std::isfinite(verdict.tail_res_v_max)) cv["tail_res_v_max"] = verdict.tail_res_v_max;
        if (std::isfinite(verdict.tail_res_u_max)) cv["tail_res_u_max"] = verdict.tail_res_u_max;
        if (std::isfinite(verdict.tail_u_inf_max)) cv["tail_u_inf_max"] = verdict.tail_u_inf_max;
        if (std::isfinite(verdict.tail_b_variation)) cv["tail_b_variation"] = verdict.tail_b_variation;
        if (std::isfinite(verdict.final_b)) cv["final_b"] = verdict.final_b;
        j["convergence"] = cv;

        if (meta.prediction->decay_rate_lower_bound) {
            const std::optional<double> rate = fit_decay_after_settling(rec);
            if (rate)
                j["decay"] = {{"fitted_rate", *rate},
                              {"predicted_lower_bound", *meta.prediction->decay_rate_lower_bound}};
        }
    } else {
        j["convergence"] = {{"status", "NOT_PREDICTED"}};
    }
    return j;
}

} // namespace nutaxis
