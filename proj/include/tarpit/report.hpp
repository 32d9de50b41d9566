#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tarpit/driver.hpp"

namespace tarpit {

// Stable, timestamp-free serialization; two campaigns with equal contents
// produce byte-identical text.
std::string report_to_json(const CampaignReport& report);
void write_report_json(const std::filesystem::path& path, const CampaignReport& report);

// One CSV row per executed event.
std::string trace_csv(const CampaignReport& report);
void write_trace_csv(const std::filesystem::path& path, const CampaignReport& report);

// One CSV row per campaign.
struct SummaryRow {
  std::string scenario;
  std::string mode;
  std::uint64_t seed = 0;
  long event_budget = 0;
  Metrics metrics;
  std::size_t memory_records = 0;
};

SummaryRow make_summary_row(const CampaignReport& report, const Metrics& metrics,
                            std::size_t memory_records);
std::string summary_csv(const std::vector<SummaryRow>& rows);
void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<SummaryRow>& rows);

// Screen-coverage-over-events step curves rendered as a standalone SVG.
struct CurveSeries {
  std::string label;
  std::vector<CoveragePoint> points;
  long end_event = 0;  // extend the final step to this event index
};

CurveSeries coverage_curve(const CampaignReport& report, const std::string& label);
std::string curves_svg(const std::string& title, const std::vector<CurveSeries>& series);
void write_curves_svg(const std::filesystem::path& path, const std::string& title,
                      const std::vector<CurveSeries>& series);

}  // namespace tarpit
