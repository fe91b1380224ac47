#pragma once

#include <ostream>

#include <json.hpp>

#include "scopt/iscopt.hpp"

namespace scopt {

nlohmann::json to_json(const OuterRecord& rec);
nlohmann::json to_json(const AuditCounters& audits);
nlohmann::json to_json(const InnerRecord& rec);

/// Final F, iterations, wall time, termination reason and audit counters.
nlohmann::json summary_json(const OuterTrace& trace);

/// Writes one JSON object per line: outer records, and optionally inner
/// records tagged with their outer index.
class JsonlTraceSink : public TraceSink
{
public:
    explicit JsonlTraceSink(std::ostream& out, bool include_inner = false)
        : out_(out), include_inner_(include_inner)
    {}

    void on_outer(const OuterRecord& rec) override;
    bool wants_inner() const override { return include_inner_; }
    void on_inner(std::size_t outer, const InnerRecord& rec) override;

private:
    std::ostream& out_;
    bool include_inner_;
};

} // namespace scopt
