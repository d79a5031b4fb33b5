#include "scalebench/genval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "scalebench/errors.hpp"

namespace scalebench {

void validate_sample(const Sample& s) {
  if (s.values.empty()) throw InvalidInput("sample '" + s.label + "' is empty");
  for (double v : s.values) {
    if (!std::isfinite(v)) throw InvalidInput("sample '" + s.label + "' has a non-finite value");
  }
}

void validate_histogram(const Histogram& h) {
  if (h.masses.empty() || h.bin_edges.size() != h.masses.size() + 1) {
    throw InvalidInput("histogram needs n masses and n + 1 edges");
  }
  for (std::size_t i = 1; i < h.bin_edges.size(); ++i) {
    if (!(h.bin_edges[i] > h.bin_edges[i - 1])) throw InvalidInput("histogram edges must be strictly increasing");
  }
  double total = 0.0;
  for (double m : h.masses) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidInput("histogram masses must be non-negative");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("histogram masses must sum to 1");
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-theta form converges fast for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double w = pi2 / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int j = 1; j <= 7; ++j) sum += std::exp(-static_cast<double>((2 * j - 1) * (2 * j - 1)) * w);
    const double cdf = std::sqrt(2.0 * std::numbers::pi) / lambda * sum;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(const Sample& a, const Sample& b) {
  validate_sample(a);
  validate_sample(b);
  auto x = a.values;
  auto y = b.values;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  // Advance both CDFs past every copy of the next smallest value, then compare.
  while (i < x.size() || j < y.size()) {
    const double v = (j >= y.size() || (i < x.size() && x[i] <= y[j])) ? x[i] : y[j];
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  return KsResult{d, kolmogorov_survival(std::sqrt(ne) * d)};
}

double emd_1d(const Histogram& a, const Histogram& b) {
  validate_histogram(a);
  validate_histogram(b);
  if (a.bin_edges != b.bin_edges) throw InvalidInput("emd_1d: histograms must share identical bin edges");
  double ca = 0.0;
  double cb = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < a.masses.size(); ++i) {
    ca += a.masses[i];
    cb += b.masses[i];
    total += std::abs(ca - cb) * (a.bin_edges[i + 1] - a.bin_edges[i]);
  }
  return total;
}

Histogram histogram_on(const std::vector<double>& values, const std::vector<double>& edges) {
  if (edges.size() < 2) throw InvalidInput("histogram needs at least two edges");
  if (values.empty()) throw InvalidInput("cannot histogram an empty sample");
  Histogram h;
  h.bin_edges = edges;
  h.masses.assign(edges.size() - 1, 0.0);
  for (double v : values) {
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::ptrdiff_t bin = (it - edges.begin()) - 1;
    bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(h.masses.size()) - 1);
    h.masses[static_cast<std::size_t>(bin)] += 1.0;
  }
  for (auto& m : h.masses) m /= static_cast<double>(values.size());
  return h;
}

std::string_view to_string(ChannelStatus status) {
  switch (status) {
    case ChannelStatus::Pass: return "pass";
    case ChannelStatus::Fail: return "fail";
    case ChannelStatus::Skipped: return "skipped";
  }
  return "?";
}

bool ValidationVerdict::passed() const {
  bool any = false;
  for (const auto& c : channels) {
    if (c.status == ChannelStatus::Fail) return false;
    if (c.status == ChannelStatus::Pass) any = true;
  }
  return any;
}

bool ValidationVerdict::partial() const {
  return std::any_of(channels.begin(), channels.end(),
                     [](const ChannelVerdict& c) { return c.status == ChannelStatus::Skipped; });
}

Json ValidationVerdict::to_json() const {
  Json list = Json::array();
  for (const auto& c : channels) {
    Json j{{"channel", c.channel},
           {"status", std::string(to_string(c.status))},
           {"statistic", c.statistic},
           {"threshold", c.threshold}};
    j["p_value"] = c.p_value ? Json(*c.p_value) : Json(nullptr);
    list.push_back(std::move(j));
  }
  return Json{{"schema", "scalebench.validation"},
              {"version", 1},
              {"verdict", passed() ? "PASS" : "FAIL"},
              {"partial", partial()},
              {"channels", std::move(list)}};
}

ValidationVerdict validate_class(const ValidationChannels& generated, const ValidationChannels& reference,
                                 const ValidationThresholds& thresholds) {
  ValidationVerdict verdict;
  auto ks_channel = [&](const char* name, const std::optional<Sample>& g, const std::optional<Sample>& r) {
    ChannelVerdict c;
    c.channel = name;
    c.threshold = thresholds.ks_max;
    if (g && r) {
      const auto ks = ks_two_sample(*g, *r);
      c.statistic = ks.statistic;
      c.p_value = ks.p_value;
      c.status = ks.statistic <= thresholds.ks_max ? ChannelStatus::Pass : ChannelStatus::Fail;
    }
    verdict.channels.push_back(c);
  };
  ks_channel("ks_input_bytes", generated.input_bytes, reference.input_bytes);
  ks_channel("ks_shuffle_bytes", generated.shuffle_bytes, reference.shuffle_bytes);

  ChannelVerdict emd;
  emd.channel = "emd_key_frequency";
  if (generated.key_frequency && reference.key_frequency) {
    const auto& edges = reference.key_frequency->bin_edges;
    emd.threshold = thresholds.emd_max * (edges.back() - edges.front());
    emd.statistic = emd_1d(*generated.key_frequency, *reference.key_frequency);
    emd.status = emd.statistic <= emd.threshold ? ChannelStatus::Pass : ChannelStatus::Fail;
  }
  verdict.channels.push_back(emd);
  return verdict;
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, delim)) {
    const auto b = cell.find_first_not_of(" \r");
    const auto e = cell.find_last_not_of(" \r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return cells;
}

std::vector<std::vector<double>> read_table(const std::filesystem::path& path, std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path.string() + " has no header line");
  header = split_row(line);
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
    std::vector<double> row;
    for (const auto& cell : split_row(line)) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Sample read_sample_file(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_table(path, header);
  Sample s;
  s.label = header.empty() ? path.filename().string() : header.front();
  for (const auto& row : rows) {
    if (row.empty()) continue;
    s.values.push_back(row.front());
  }
  validate_sample(s);
  return s;
}

Histogram read_histogram_file(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_table(path, header);
  auto col = [&](const char* name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw InvalidInput(path.string() + ": missing column '" + name + "'");
  };
  const auto lo = col("lo");
  const auto hi = col("hi");
  const auto mass = col("mass");
  Histogram h;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() <= std::max({lo, hi, mass})) throw InvalidInput(path.string() + ": short row");
    if (r == 0) h.bin_edges.push_back(row[lo]);
    else if (row[lo] != h.bin_edges.back()) throw InvalidInput(path.string() + ": bins are not contiguous");
    h.bin_edges.push_back(row[hi]);
    h.masses.push_back(row[mass]);
  }
  validate_histogram(h);
  return h;
}

GeneratedChannels generated_channels(const std::vector<JobSpec>& jobs) {
  GeneratedChannels out;
  out.input_bytes.label = "input_bytes";
  out.shuffle_bytes.label = "shuffle_bytes";
  for (const auto& job : jobs) {
    out.input_bytes.values.push_back(static_cast<double>(job.source_input_bytes()));
    out.shuffle_bytes.values.push_back(static_cast<double>(job.total_shuffle_bytes()));
    for (const auto& st : job.stages) {
      for (double share : st.task_skew_shares) out.relative_task_load.push_back(share * st.task_count);
    }
  }
  return out;
}

}  // namespace scalebench
