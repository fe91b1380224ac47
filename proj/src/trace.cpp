#include "scopt/trace.hpp"

namespace scopt {

namespace {

template <typename T>
nlohmann::json optional_value(const std::optional<T>& v)
{
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

} // namespace

nlohmann::json to_json(const OuterRecord& rec)
{
    return {
        {"type", "outer"},
        {"i", rec.i},
        {"epsilon", rec.epsilon},
        {"tau", rec.tau},
        {"tau_formula", rec.tau_formula},
        {"F_value", rec.F_value},
        {"F_next", rec.F_next},
        {"step_kind", to_string(rec.step_kind)},
        {"inner_iterations", rec.inner_iterations},
        {"inner_gap", rec.inner_gap},
        {"inner_capped", rec.inner_capped},
        {"halvings", rec.halvings},
        {"descent_xi", optional_value(rec.descent_xi)},
        {"descent_residual", optional_value(rec.descent_residual)},
        {"contraction_residual", optional_value(rec.contraction_residual)},
        {"quadratic_residual", optional_value(rec.quadratic_residual)},
        {"elapsed", rec.elapsed},
    };
}

nlohmann::json to_json(const AuditCounters& a)
{
    return {
        {"descent_checks", a.descent_checks},
        {"descent_failures", a.descent_failures},
        {"xi_checks", a.xi_checks},
        {"xi_failures", a.xi_failures},
        {"xi_not_applicable", a.xi_not_applicable},
        {"contraction_checks", a.contraction_checks},
        {"contraction_failures", a.contraction_failures},
        {"contraction_not_applicable", a.contraction_not_applicable},
        {"quadratic_checks", a.quadratic_checks},
        {"quadratic_failures", a.quadratic_failures},
        {"domain_guard_activations", a.domain_guard_activations},
        {"noise_floor_retries", a.noise_floor_retries},
        {"inner_caps", a.inner_caps},
        {"total_failures", a.total_failures()},
    };
}

nlohmann::json to_json(const InnerRecord& rec)
{
    return {
        {"type", "inner"},
        {"k", rec.k},
        {"gap_bound", rec.gap_bound},
        {"surrogate_value", rec.surrogate_value},
        {"restarted", rec.restarted},
    };
}

nlohmann::json summary_json(const OuterTrace& trace)
{
    return {
        {"termination", to_string(trace.termination)},
        {"iterations", trace.iterations},
        {"final_F", trace.final_F},
        {"final_epsilon", trace.final_epsilon},
        {"elapsed", trace.elapsed},
        {"steps_after_sigma", optional_value(trace.steps_after_sigma)},
        {"audits", to_json(trace.audits)},
    };
}

void JsonlTraceSink::on_outer(const OuterRecord& rec)
{
    out_ << to_json(rec).dump() << '\n';
}

void JsonlTraceSink::on_inner(std::size_t outer, const InnerRecord& rec)
{
    nlohmann::json j = to_json(rec);
    j["outer"] = outer;
    out_ << j.dump() << '\n';
}

} // namespace scopt
