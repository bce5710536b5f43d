#include "cmlab/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cmlab/errors.hpp"

namespace cmlab {

using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string optional_csv(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

MetricMethod method_from_name(const std::string& s) {
  for (auto m : {MetricMethod::exact_1d, MetricMethod::sliced, MetricMethod::gaussian_closed_form,
                 MetricMethod::histogram_tv, MetricMethod::analytic_tv}) {
    if (s == method_name(m)) return m;
  }
  throw std::invalid_argument("unknown metric method '" + s + "'");
}

double fit_x_of(const ReportRow& row, const std::string& fit_x) {
  if (fit_x == "eps_sc_measured" && row.eps_sc_measured) return *row.eps_sc_measured;
  if (fit_x == "eps_cm_measured" && row.eps_cm_measured) return *row.eps_cm_measured;
  if (fit_x == "step") return static_cast<double>(row.step);
  return row.sweep_value;
}

void write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << body;
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FitResult fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("fit_loglog: xs and ys differ in length");
  if (xs.size() < 3) throw std::invalid_argument("fit_loglog: need at least 3 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(xs.size()), ly(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw InvalidRangeError("fit_loglog: values must be positive");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidRangeError("fit_loglog: xs must not all be equal");
  FitResult f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (f.intercept + f.slope * lx[i]);
    sse += r * r;
  }
  // A perfectly flat response is fitted exactly.
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  f.points = xs.size();
  return f;
}

json report_to_json(const Report& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"sweep_kind", r.sweep_kind},
                    {"sweep_value", r.sweep_value},
                    {"step", r.step},
                    {"h", r.h},
                    {"eps_sc_target", r.eps_sc_target},
                    {"eps_sc_measured", optional_json(r.eps_sc_measured)},
                    {"eps_cm_target", r.eps_cm_target},
                    {"eps_cm_measured", optional_json(r.eps_cm_measured)},
                    {"lipschitz_f", optional_json(r.lipschitz_f)},
                    {"tol", r.tol},
                    {"seed", r.seed},
                    {"model_kind", r.model_kind},
                    {"sampler", r.sampler},
                    {"metric", r.metric}});
  }
  json j{{"name", report.name}, {"config", report.config}, {"rows", rows}, {"fit_x", report.fit_x}};
  if (report.fit) {
    j["fit"] = {{"slope", report.fit->slope},
                {"intercept", report.fit->intercept},
                {"r_squared", report.fit->r_squared},
                {"points", report.fit->points}};
  } else {
    j["fit"] = nullptr;
  }
  return j;
}

Report report_from_json(const json& j) {
  Report rep;
  rep.name = j.at("name").get<std::string>();
  rep.config = j.at("config");
  rep.fit_x = j.at("fit_x").get<std::string>();
  for (const auto& r : j.at("rows")) {
    ReportRow row;
    row.sweep_kind = r.at("sweep_kind").get<std::string>();
    row.sweep_value = r.at("sweep_value").get<double>();
    row.step = r.at("step").get<std::size_t>();
    row.h = r.at("h").get<double>();
    row.eps_sc_target = r.at("eps_sc_target").get<double>();
    row.eps_sc_measured = optional_from(r, "eps_sc_measured");
    row.eps_cm_target = r.at("eps_cm_target").get<double>();
    row.eps_cm_measured = optional_from(r, "eps_cm_measured");
    row.lipschitz_f = optional_from(r, "lipschitz_f");
    row.tol = r.at("tol").get<double>();
    row.seed = r.at("seed").get<std::uint64_t>();
    row.model_kind = r.at("model_kind").get<std::string>();
    row.sampler = r.at("sampler").get<std::string>();
    const json& m = r.at("metric");
    row.metric.name = m.at("name").get<std::string>();
    row.metric.value = m.at("value").get<double>();
    row.metric.method = method_from_name(m.at("method").get<std::string>());
    row.metric.n_used = m.at("n_used").get<std::size_t>();
    row.metric.std_err = optional_from(m, "std_err");
    rep.rows.push_back(std::move(row));
  }
  if (!j.at("fit").is_null()) {
    const json& f = j.at("fit");
    rep.fit = FitResult{f.at("slope").get<double>(), f.at("intercept").get<double>(), f.at("r_squared").get<double>(),
                        f.at("points").get<std::size_t>()};
  }
  return rep;
}

std::string csv_header() {
  return "experiment,sweep_kind,sweep_value,step,h,eps_sc_target,eps_sc_measured,eps_cm_target,eps_cm_measured,"
         "lipschitz_f,tol,seed,model_kind,sampler,metric,method,value,n_used,std_err";
}

std::string report_csv(const Report& report) {
  std::ostringstream out;
  out << csv_header() << '\n';
  for (const auto& r : report.rows) {
    out << report.name << ',' << r.sweep_kind << ',' << format_number(r.sweep_value) << ',' << r.step << ','
        << format_number(r.h) << ',' << format_number(r.eps_sc_target) << ',' << optional_csv(r.eps_sc_measured) << ','
        << format_number(r.eps_cm_target) << ',' << optional_csv(r.eps_cm_measured) << ','
        << optional_csv(r.lipschitz_f) << ',' << format_number(r.tol) << ',' << r.seed << ',' << r.model_kind << ','
        << r.sampler << ',' << r.metric.name << ',' << method_name(r.metric.method) << ','
        << format_number(r.metric.value) << ',' << r.metric.n_used << ',' << optional_csv(r.metric.std_err) << '\n';
  }
  return out.str();
}

std::vector<std::string> emit(const Report& report, const std::string& format, const std::string& out_dir) {
  if (format != "csv" && format != "json") throw ConfigError("format", "must be csv or json");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  const fs::path main = fs::path(out_dir) / (report.name + "." + format);
  write_file(main, format == "csv" ? report_csv(report) : report_to_json(report).dump(2) + "\n");
  written.push_back(main.string());

  std::ostringstream dat;
  dat << "# " << (report.fit_x.empty() ? "sweep_value" : report.fit_x) << " value\n";
  for (const auto& r : report.rows) dat << format_number(fit_x_of(r, report.fit_x)) << ' ' << format_number(r.metric.value) << '\n';
  const fs::path plot = fs::path(out_dir) / (report.name + ".dat");
  write_file(plot, dat.str());
  written.push_back(plot.string());
  return written;
}

}  // namespace cmlab
