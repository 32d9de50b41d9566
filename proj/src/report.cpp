#include "tarpit/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace tarpit {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt2(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

template <typename T>
std::string opt_field(const std::optional<T>& v) {
  if (!v) return "na";
  if constexpr (std::is_floating_point_v<T>) {
    return fmt(*v);
  } else {
    return std::to_string(*v);
  }
}

ordered_json event_json(const UiEvent& ev) {
  ordered_json j;
  j["action_id"] = ev.action_id;
  j["type"] = to_string(ev.type);
  j["bounds"] = {ev.bounds.left, ev.bounds.top, ev.bounds.right, ev.bounds.bottom};
  if (ev.payload) j["payload"] = *ev.payload;
  return j;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string report_to_json(const CampaignReport& r) {
  ordered_json j;
  j["scenario"] = r.scenario_name;
  j["mode"] = to_string(r.mode);
  j["seed"] = r.seed;
  j["event_budget"] = r.event_budget;
  j["events_executed"] = r.events_executed;
  j["advisor_queries"] = r.advisor_queries;
  j["first_crash_event"] =
      r.first_crash_event ? ordered_json(*r.first_crash_event) : ordered_json(nullptr);

  j["episodes"] = ordered_json::array();
  for (const auto& ep : r.episodes) {
    ordered_json e;
    e["start_event"] = ep.start_event;
    e["end_event"] = ep.end_event;
    e["trap_screen"] = ep.trap_screen;
    e["attempts"] = ep.attempts;
    e["escaped"] = ep.escaped;
    e["crashed"] = ep.crashed;
    e["first_attempt"] = ep.first_attempt;
    e["via_reuse"] = ep.via_reuse;
    e["forced_back"] = ep.forced_back;
    e["escape_event"] =
        ep.escape_event ? event_json(*ep.escape_event) : ordered_json(nullptr);
    e["pre_escape_hash"] = ep.pre_escape_hash;
    e["advisor_queries"] = ep.advisor_queries;
    j["episodes"].push_back(std::move(e));
  }

  j["crashes"] = ordered_json::array();
  for (const auto& c : r.crashes) {
    j["crashes"].push_back(
        {{"signature", c.signature}, {"event_index", c.event_index}, {"screen", c.screen}});
  }

  j["coverage"] = ordered_json::array();
  for (const auto& p : r.coverage) {
    j["coverage"].push_back({{"event_index", p.event_index},
                             {"screens", p.screens},
                             {"transitions", p.transitions}});
  }

  j["state_screens"] = r.state_screens;
  j["state_hashes"] = r.state_hashes;

  j["trace"] = ordered_json::array();
  for (const auto& t : r.trace) {
    ordered_json e;
    e["index"] = t.index;
    e["phase"] = t.phase;
    e["event"] = event_json(t.event);
    e["pre_screen"] = t.pre_screen;
    e["post_screen"] = t.post_screen;
    e["pre_state"] = t.pre_state;
    e["post_state"] = t.post_state;
    if (t.crash_signature) e["crash_signature"] = *t.crash_signature;
    j["trace"].push_back(std::move(e));
  }

  return j.dump(2) + "\n";
}

void write_report_json(const std::filesystem::path& path, const CampaignReport& report) {
  write_text(path, report_to_json(report));
}

std::string trace_csv(const CampaignReport& r) {
  std::string out =
      "index,phase,action_id,type,payload,pre_screen,post_screen,pre_state,post_state,"
      "crash_signature\n";
  for (const auto& t : r.trace) {
    out += std::to_string(t.index);
    out += ',';
    out += t.phase;
    out += ',';
    out += std::to_string(t.event.action_id);
    out += ',';
    out += to_string(t.event.type);
    out += ',';
    out += csv_escape(t.event.payload.value_or(""));
    out += ',';
    out += csv_escape(t.pre_screen);
    out += ',';
    out += csv_escape(t.post_screen);
    out += ',';
    out += std::to_string(t.pre_state);
    out += ',';
    out += std::to_string(t.post_state);
    out += ',';
    out += csv_escape(t.crash_signature.value_or(""));
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::filesystem::path& path, const CampaignReport& report) {
  write_text(path, trace_csv(report));
}

SummaryRow make_summary_row(const CampaignReport& report, const Metrics& metrics,
                            std::size_t memory_records) {
  SummaryRow row;
  row.scenario = report.scenario_name;
  row.mode = to_string(report.mode);
  row.seed = report.seed;
  row.event_budget = report.event_budget;
  row.metrics = metrics;
  row.memory_records = memory_records;
  return row;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out =
      "scenario,mode,seed,event_budget,events_executed,unique_screens,screen_coverage,"
      "unique_transitions,episodes,escaped_episodes,escape_success_rate,"
      "first_attempt_escape_rate,tarpit_detection_precision,time_in_tarpit,"
      "unique_crashes,total_crashes,first_crash_event,advisor_queries,memory_records\n";
  for (const auto& r : rows) {
    const Metrics& m = r.metrics;
    out += csv_escape(r.scenario);
    out += ',';
    out += r.mode;
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += std::to_string(r.event_budget);
    out += ',';
    out += std::to_string(m.events_executed);
    out += ',';
    out += std::to_string(m.unique_screens);
    out += ',';
    out += fmt(m.screen_coverage);
    out += ',';
    out += std::to_string(m.unique_transitions);
    out += ',';
    out += std::to_string(m.episodes);
    out += ',';
    out += std::to_string(m.escaped_episodes);
    out += ',';
    out += opt_field(m.escape_success_rate);
    out += ',';
    out += opt_field(m.first_attempt_escape_rate);
    out += ',';
    out += opt_field(m.tarpit_detection_precision);
    out += ',';
    out += fmt(m.time_in_tarpit);
    out += ',';
    out += std::to_string(m.unique_crashes);
    out += ',';
    out += std::to_string(m.total_crashes);
    out += ',';
    out += opt_field(m.first_crash_event);
    out += ',';
    out += std::to_string(m.advisor_queries);
    out += ',';
    out += std::to_string(r.memory_records);
    out += '\n';
  }
  return out;
}

void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<SummaryRow>& rows) {
  write_text(path, summary_csv(rows));
}

CurveSeries coverage_curve(const CampaignReport& report, const std::string& label) {
  CurveSeries s;
  s.label = label;
  s.points = report.coverage;
  s.end_event = report.events_executed;
  return s;
}

std::string curves_svg(const std::string& title, const std::vector<CurveSeries>& series) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  constexpr double kW = 640, kH = 420;
  constexpr double kL = 60, kR = 620, kT = 48, kB = 370;

  long x_max = 1;
  int y_max = 1;
  for (const auto& s : series) {
    x_max = std::max(x_max, s.end_event);
    for (const auto& p : s.points) y_max = std::max(y_max, p.screens);
  }

  const auto sx = [&](long e) {
    const double x = std::max<long>(e, 0);
    return kL + (kR - kL) * (x / static_cast<double>(x_max));
  };
  const auto sy = [&](int v) {
    return kB - (kB - kT) * (v / static_cast<double>(y_max));
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt2(kW) +
         "\" height=\"" + fmt2(kH) + "\" viewBox=\"0 0 " + fmt2(kW) + " " + fmt2(kH) +
         "\">\n";
  svg += "<rect width=\"" + fmt2(kW) + "\" height=\"" + fmt2(kH) + "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt2(kW / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
         xml_escape(title) + "</text>\n";

  // Axes with five ticks each.
  svg += "<line x1=\"" + fmt2(kL) + "\" y1=\"" + fmt2(kB) + "\" x2=\"" + fmt2(kR) +
         "\" y2=\"" + fmt2(kB) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt2(kL) + "\" y1=\"" + fmt2(kT) + "\" x2=\"" + fmt2(kL) +
         "\" y2=\"" + fmt2(kB) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const long xv = x_max * i / 5;
    const int yv = y_max * i / 5;
    svg += "<line x1=\"" + fmt2(sx(xv)) + "\" y1=\"" + fmt2(kB) + "\" x2=\"" +
           fmt2(sx(xv)) + "\" y2=\"" + fmt2(kB + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt2(sx(xv)) + "\" y=\"" + fmt2(kB + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           std::to_string(xv) + "</text>\n";
    svg += "<line x1=\"" + fmt2(kL - 5) + "\" y1=\"" + fmt2(sy(yv)) + "\" x2=\"" +
           fmt2(kL) + "\" y2=\"" + fmt2(sy(yv)) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt2(kL - 9) + "\" y=\"" + fmt2(sy(yv) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           std::to_string(yv) + "</text>\n";
  }
  svg += "<text x=\"" + fmt2((kL + kR) / 2) + "\" y=\"" + fmt2(kH - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
         "events executed</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt2((kT + kB) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 16 " +
         fmt2((kT + kB) / 2) + ")\">unique screens</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[si % std::size(kColors)];
    if (!s.points.empty()) {
      std::string pts;
      int value = s.points.front().screens;
      pts += fmt2(sx(s.points.front().event_index)) + "," + fmt2(sy(value));
      for (std::size_t i = 1; i < s.points.size(); ++i) {
        const auto& p = s.points[i];
        pts += " " + fmt2(sx(p.event_index)) + "," + fmt2(sy(value));
        value = p.screens;
        pts += " " + fmt2(sx(p.event_index)) + "," + fmt2(sy(value));
      }
      pts += " " + fmt2(sx(std::max(s.end_event, s.points.back().event_index))) + "," +
             fmt2(sy(value));
      svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
             "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    }
    const double ly = kT + 16.0 * static_cast<double>(si);
    svg += "<line x1=\"" + fmt2(kR - 150) + "\" y1=\"" + fmt2(ly) + "\" x2=\"" +
           fmt2(kR - 126) + "\" y2=\"" + fmt2(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt2(kR - 120) + "\" y=\"" + fmt2(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(s.label) +
           "</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

void write_curves_svg(const std::filesystem::path& path, const std::string& title,
                      const std::vector<CurveSeries>& series) {
  write_text(path, curves_svg(title, series));
}

}  // namespace tarpit
