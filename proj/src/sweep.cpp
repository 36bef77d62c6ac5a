#include "losp/sweep.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "losp/branching.hpp"
#include "losp/errors.hpp"
#include "losp/gilbert.hpp"
#include "losp/parallel.hpp"
#include "losp/random.hpp"

namespace losp {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

template <typename T>
std::vector<T> read_list(const json& j, const char* field, std::vector<T> fallback) {
  if (!j.contains(field)) return fallback;
  const json& v = j.at(field);
  if (!v.is_array()) throw PreconditionError(std::string("config field '") + field + "': expected an array");
  try {
    return v.get<std::vector<T>>();
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("config field '") + field + "': " + e.what());
  }
}

template <typename T>
T read_scalar(const json& j, const char* field, T fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("config field '") + field + "': " + e.what());
  }
}

json config_to_json(const SweepConfig& c) {
  json grid;
  grid["d"] = c.d;
  grid["r"] = c.r;
  grid["omega"] = c.omega;
  if (!c.n.empty()) grid["n"] = c.n;
  if (!c.n_over_omega.empty()) grid["n_over_omega"] = c.n_over_omega;
  grid["lambda"] = c.lambda;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["model"] = c.model;
  j["estimator"] = c.estimator;
  j["grid"] = grid;
  j["reps"] = c.reps;
  j["master_seed"] = c.master_seed;
  j["K"] = c.K;
  j["window"] = c.window;
  j["output"] = c.output.string();
  j["workers"] = c.workers;
  j["timing"] = c.timing;
  return j;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string schema_line() { return "# schema_version: " + std::to_string(kSchemaVersion); }

}  // namespace

void SweepConfig::validate() const {
  require(model == "site" || model == "bond" || model == "ddim", "config field 'model': expected site, bond or ddim");
  require(estimator == "pc" || estimator == "theta" || estimator == "giant",
          "config field 'estimator': expected pc, theta or giant");
  if (d.empty() || r.empty() || omega.empty() || lambda.empty()) throw PreconditionError("nonempty grid required");
  if (estimator != "theta") {
    if (n.empty() == n_over_omega.empty())
      throw PreconditionError(n.empty() ? "nonempty grid required"
                                        : "config: give exactly one of grid.n and grid.n_over_omega");
  }
  require(reps >= 10, "config field 'reps': must be >= 10");
  require(!output.empty(), "config field 'output': required");
  require(workers >= 1, "config field 'workers': must be >= 1");
  if (model != "ddim") {
    for (int v : d) require(v == 2, "config field 'grid.d': site and bond models are planar");
    for (int v : r) require(v == 1, "config field 'grid.r': site and bond models have r = 1");
  }
  if (estimator == "theta") require(model == "site", "config: theta is defined for the site model");
  if (model == "ddim") require(estimator == "pc", "config: the ddim model supports the pc estimator only");
  if (estimator != "pc")
    for (double l : lambda) require(l > 0.0, "config field 'grid.lambda': must be positive");
  for (Coord w : omega) require(w >= 1, "config field 'grid.omega': must be positive");
}

SweepConfig parse_sweep_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw PreconditionError(std::string("config: malformed JSON: ") + e.what());
  }
  require(j.is_object(), "config: top level must be an object");
  require(j.contains("schema_version"), "config field 'schema_version': required");
  const int version = read_scalar<int>(j, "schema_version", 0);
  require(version == kSchemaVersion, "config field 'schema_version': unsupported version " + std::to_string(version));

  SweepConfig c;
  c.model = read_scalar<std::string>(j, "model", c.model);
  c.estimator = read_scalar<std::string>(j, "estimator", c.estimator);
  require(j.contains("grid") && j.at("grid").is_object(), "config field 'grid': required object");
  const json& g = j.at("grid");
  c.d = read_list<int>(g, "d", c.d);
  c.r = read_list<int>(g, "r", c.r);
  c.omega = read_list<Coord>(g, "omega", {});
  c.n = read_list<Coord>(g, "n", {});
  c.n_over_omega = read_list<Coord>(g, "n_over_omega", {});
  c.lambda = read_list<double>(g, "lambda", c.lambda);
  c.reps = read_scalar<std::uint64_t>(j, "reps", c.reps);
  c.master_seed = read_scalar<std::uint64_t>(j, "master_seed", c.master_seed);
  c.K = read_scalar<std::uint64_t>(j, "K", c.K);
  c.window = read_scalar<Coord>(j, "window", c.window);
  c.output = read_scalar<std::string>(j, "output", "");
  c.workers = read_scalar<unsigned>(j, "workers", c.workers);
  c.timing = read_scalar<bool>(j, "timing", c.timing);
  c.validate();
  return c;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "config: cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_sweep_config(buf.str());
}

std::vector<SweepPoint> sweep_points(const SweepConfig& cfg) {
  std::vector<SweepPoint> pts;
  const bool theta = cfg.estimator == "theta";
  const auto& sides = cfg.n.empty() ? cfg.n_over_omega : cfg.n;
  for (int d : cfg.d)
    for (int r : cfg.r)
      for (Coord w : cfg.omega) {
        std::vector<Coord> ns;
        if (theta)
          ns.push_back(cfg.window * w);
        else
          for (Coord s : sides) ns.push_back(cfg.n.empty() ? s * w : s);
        for (Coord n : ns)
          for (double l : cfg.lambda) pts.push_back({d, r, w, n, l});
      }
  return pts;
}

std::string point_key(const std::string& model, const std::string& estimator, const SweepPoint& pt) {
  return model + "|" + estimator + "|" + std::to_string(pt.d) + "|" + std::to_string(pt.r) + "|" +
         std::to_string(pt.omega) + "|" + std::to_string(pt.n) + "|" + fmt(pt.lambda);
}

std::uint64_t point_seed(std::uint64_t master_seed, const std::string& key) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : key) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return hash2(master_seed, h);
}

EstimateRecord run_point(const SweepConfig& cfg, const SweepPoint& pt, unsigned threads) {
  const std::uint64_t seed = point_seed(cfg.master_seed, point_key(cfg.model, cfg.estimator, pt));
  const PercolationModel model = cfg.model == "bond" ? PercolationModel::bond : PercolationModel::site;
  const auto start = std::chrono::steady_clock::now();
  EstimateRecord rec;
  if (cfg.estimator == "pc") {
    rec = estimate_pc(model, pt.omega, pt.n, pt.d, pt.r, cfg.reps, seed, threads);
  } else if (cfg.estimator == "theta") {
    rec = estimate_theta(pt.omega, pt.lambda, cfg.K, cfg.reps, seed, cfg.window, threads).raw;
  } else {
    rec = estimate_giant(model, pt.omega, pt.n, pt.lambda, cfg.reps, seed, threads);
  }
  rec.model = cfg.model;
  rec.d = pt.d;
  rec.r = pt.r;
  rec.n = pt.n;
  rec.lambda = pt.lambda;
  rec.seed = seed;
  if (cfg.timing)
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::string csv_header() {
  return "model,d,r,omega,n,lambda,p,estimator,estimate,stderr,ci_low,ci_high,reps,seed,wall_seconds";
}

std::string csv_row(const EstimateRecord& rec) {
  std::ostringstream out;
  out << rec.model << ',' << rec.d << ',' << rec.r << ',' << rec.omega << ',' << rec.n << ',' << fmt(rec.lambda)
      << ',' << fmt(rec.p) << ',' << rec.estimator << ',' << fmt(rec.estimate) << ',' << fmt(rec.std_error) << ','
      << fmt(rec.ci_low) << ',' << fmt(rec.ci_high) << ',' << rec.reps << ',' << rec.seed << ','
      << fmt(rec.wall_seconds);
  return out.str();
}

std::vector<EstimateRecord> read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "results: cannot read " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "results: empty file");
  if (line != schema_line()) {
    const std::string prefix = "# schema_version: ";
    if (line.rfind(prefix, 0) == 0)
      throw PreconditionError("results: schema version mismatch (file has " + line.substr(prefix.size()) +
                              ", expected " + std::to_string(kSchemaVersion) + ")");
    throw PreconditionError("results: missing schema_version line");
  }
  require(std::getline(in, line) && line == csv_header(), "results: unexpected header");
  std::vector<EstimateRecord> out;
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 15) throw PreconditionError("results: line " + std::to_string(lineno) + ": expected 15 fields");
    EstimateRecord r;
    try {
      r.model = f[0];
      r.d = std::stoi(f[1]);
      r.r = std::stoi(f[2]);
      r.omega = std::stoll(f[3]);
      r.n = std::stoll(f[4]);
      r.lambda = std::stod(f[5]);
      r.p = std::stod(f[6]);
      r.estimator = f[7];
      r.estimate = std::stod(f[8]);
      r.std_error = std::stod(f[9]);
      r.ci_low = std::stod(f[10]);
      r.ci_high = std::stod(f[11]);
      r.reps = std::stoull(f[12]);
      r.seed = std::stoull(f[13]);
      r.wall_seconds = std::stod(f[14]);
    } catch (const std::exception&) {
      throw PreconditionError("results: line " + std::to_string(lineno) + ": malformed number");
    }
    out.push_back(std::move(r));
  }
  return out;
}

SweepSummary run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const auto points = sweep_points(cfg);
  SweepSummary summary;
  summary.total = points.size();

  std::set<std::string> done;
  bool fresh = true;
  if (std::filesystem::exists(cfg.output) && std::filesystem::file_size(cfg.output) > 0) {
    // Drop a partial last line left by an interrupted run.
    std::ifstream in(cfg.output, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    if (text.back() != '\n') {
      text.erase(text.rfind('\n') + 1);
      std::ofstream(cfg.output, std::ios::binary | std::ios::trunc) << text;
    }
    if (!text.empty()) {
      fresh = false;
      for (const auto& rec : read_results(cfg.output))
        done.insert(point_key(rec.model, rec.estimator, {rec.d, rec.r, rec.omega, rec.n, rec.lambda}));
    }
  }

  std::vector<SweepPoint> pending;
  for (const auto& pt : points) {
    if (done.count(point_key(cfg.model, cfg.estimator, pt)))
      ++summary.skipped;
    else
      pending.push_back(pt);
  }

  if (fresh || !pending.empty()) {
    if (cfg.output.has_parent_path()) std::filesystem::create_directories(cfg.output.parent_path());
    std::ofstream out(cfg.output, fresh ? std::ios::trunc : std::ios::app);
    require(out.good(), "sweep: cannot write " + cfg.output.string());
    if (fresh) out << schema_line() << '\n' << csv_header() << '\n' << std::flush;

    const unsigned inner_threads = cfg.workers > 1 ? 1 : 0;
    for (std::size_t begin = 0; begin < pending.size(); begin += cfg.workers) {
      const std::size_t end = std::min(pending.size(), begin + cfg.workers);
      std::vector<EstimateRecord> batch(end - begin);
      parallel_for(
          batch.size(), [&](std::size_t i) { batch[i] = run_point(cfg, pending[begin + i], inner_threads); },
          cfg.workers);
      for (const auto& rec : batch) out << csv_row(rec) << '\n';
      out.flush();
      summary.computed += batch.size();
    }
  }

  json sidecar;
  sidecar["schema_version"] = kSchemaVersion;
  sidecar["config"] = config_to_json(cfg);
  sidecar["columns"] = split(csv_header(), ',');
  sidecar["points"] = points.size();
  std::ofstream side(cfg.output.string() + ".json", std::ios::trunc);
  require(side.good(), "sweep: cannot write the sidecar");
  side << sidecar.dump(2) << '\n';
  return summary;
}

std::optional<Theory> parse_theory(const std::string& name) {
  if (name == "pc_limit") return Theory::pc_limit;
  if (name == "giant_fraction") return Theory::giant_fraction;
  if (name == "theta") return Theory::theta;
  if (name == "bond_fraction") return Theory::bond_fraction;
  if (name == "lambda_dr") return Theory::lambda_dr;
  return std::nullopt;
}

std::string theory_name(Theory t) {
  switch (t) {
    case Theory::pc_limit: return "pc_limit";
    case Theory::giant_fraction: return "giant_fraction";
    case Theory::theta: return "theta";
    case Theory::bond_fraction: return "bond_fraction";
    case Theory::lambda_dr: return "lambda_dr";
  }
  return "";
}

double default_tolerance(Theory t) {
  switch (t) {
    case Theory::pc_limit:
    case Theory::lambda_dr: return 0.07;
    default: return 0.05;
  }
}

std::vector<ReportRow> report(const std::vector<EstimateRecord>& records, Theory theory, double tolerance,
                              std::uint64_t seed) {
  require(tolerance > 0.0, "report: tolerance must be positive");
  std::map<std::pair<int, int>, double> dr_cache;
  auto dr = [&](int d, int r) {
    auto it = dr_cache.find({d, r});
    if (it != dr_cache.end()) return it->second;
    const double v = lambda_dr(d, r, 4e-3, seed).value;
    dr_cache[{d, r}] = v;
    return v;
  };

  std::vector<ReportRow> rows;
  for (const auto& rec : records) {
    ReportRow row;
    row.record = rec;
    const double w = static_cast<double>(rec.omega);
    bool applies = false;
    switch (theory) {
      case Theory::pc_limit:
        if (rec.estimator == "pc" && rec.r == 1) {
          applies = true;
          row.scaled = rec.estimate * w;
          // Bond: each vertex has 4 omega potential partners, so the
          // expected degree 4 lambda reaches one at lambda = 1/4.
          row.theory = rec.model == "bond" ? 1.0 / 4.0 : dr(rec.d, 1);
        }
        break;
      case Theory::lambda_dr:
        if (rec.estimator == "pc" && rec.model != "bond") {
          applies = true;
          row.scaled = rec.estimate * std::pow(w, rec.r);
          row.theory = dr(rec.d, rec.r);
        }
        break;
      case Theory::giant_fraction:
        if (rec.estimator == "giant" && rec.model == "site") {
          applies = true;
          row.scaled = rec.estimate;
          row.theory = phi(rec.lambda);
        }
        break;
      case Theory::theta:
        if (rec.estimator == "theta") {
          applies = true;
          row.scaled = rec.estimate * w / rec.lambda;
          row.theory = phi(rec.lambda);
        }
        break;
      case Theory::bond_fraction:
        if (rec.estimator == "giant" && rec.model == "bond") {
          applies = true;
          row.scaled = rec.estimate;
          row.theory = phi_bar(4.0 * rec.lambda);
        }
        break;
    }
    if (!applies) continue;
    row.abs_dev = std::abs(row.scaled - row.theory);
    row.rel_dev = row.theory != 0.0 ? row.abs_dev / std::abs(row.theory) : row.abs_dev;
    row.pass = row.abs_dev <= tolerance;
    rows.push_back(row);
  }
  return rows;
}

namespace {
std::string scaled_label(Theory t) {
  switch (t) {
    case Theory::pc_limit: return "omega*pc";
    case Theory::lambda_dr: return "omega^r*pc";
    case Theory::theta: return "theta*omega/lambda";
    default: return "C1/|V|";
  }
}
}  // namespace

void write_report_text(std::ostream& out, const std::vector<ReportRow>& rows, Theory theory) {
  out << "theory: " << theory_name(theory) << "\n";
  out << std::left << std::setw(6) << "model" << std::right << std::setw(3) << "d" << std::setw(3) << "r"
      << std::setw(7) << "omega" << std::setw(7) << "n" << std::setw(9) << "lambda" << std::setw(20)
      << scaled_label(theory) << std::setw(20) << "theory" << std::setw(20) << "abs_dev" << std::setw(20)
      << "rel_dev" << std::setw(6) << "pass" << '\n';
  for (const auto& row : rows) {
    const auto& r = row.record;
    out << std::left << std::setw(6) << r.model << std::right << std::setw(3) << r.d << std::setw(3) << r.r
        << std::setw(7) << r.omega << std::setw(7) << r.n << std::setw(9) << fmt(r.lambda) << std::setw(20)
        << fmt(row.scaled) << std::setw(20) << fmt(row.theory) << std::setw(20) << fmt(row.abs_dev)
        << std::setw(20) << fmt(row.rel_dev) << std::setw(6) << (row.pass ? "yes" : "no") << '\n';
  }
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows, Theory theory) {
  out << "model,d,r,omega,n,lambda,estimator,theory_kind,scaled_estimate,theory,abs_dev,rel_dev,pass\n";
  for (const auto& row : rows) {
    const auto& r = row.record;
    out << r.model << ',' << r.d << ',' << r.r << ',' << r.omega << ',' << r.n << ',' << fmt(r.lambda) << ','
        << r.estimator << ',' << theory_name(theory) << ',' << fmt(row.scaled) << ',' << fmt(row.theory) << ','
        << fmt(row.abs_dev) << ',' << fmt(row.rel_dev) << ',' << (row.pass ? 1 : 0) << '\n';
  }
}

}  // namespace losp
