#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "mrf/kl_bound.hpp"
#include "mrf/lyapunov.hpp"
#include "mrf/oracle.hpp"
#include "mrf/synthesis.hpp"

namespace mrf {

using ReportJson = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

/// {"schema_version", "kind", "seed"} header every report starts with.
ReportJson report_header(const std::string& kind, std::uint64_t seed);

ReportJson to_json(const Vector& v);
ReportJson to_json(const BandCertificate& c);
ReportJson to_json(const DecreaseModulus& m);
ReportJson to_json(const SupersolutionReport& r);
ReportJson to_json(const PetrovReport& r);
ReportJson to_json(const LegChecks& c);
ReportJson to_json(const LegSummary& s);
ReportJson to_json(const SynthesisResult& r);
ReportJson to_json(const SigmaEnvelopes& e);
ReportJson to_json(const SandwichAudit& a);
ReportJson to_json(const KLAxiomReport& r);
ReportJson to_json(const KLAudit& a);
ReportJson to_json(const GridValueTable& t);
ReportJson to_json(const BoundComparison& c);
ReportJson to_json(const SpiralFacts& f);

/// Pretty-printed with a trailing newline; non-finite numbers become null.
void write_json_file(const std::string& path, const ReportJson& report);
std::string dump_json(const ReportJson& report);

}  // namespace mrf
