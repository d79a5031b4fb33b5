#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scalebench/canonical.hpp"
#include "scalebench/workload.hpp"

namespace scalebench {

struct Sample {
  std::vector<double> values;
  std::string label;
};

struct Histogram {
  std::vector<double> bin_edges;  // n + 1, strictly increasing
  std::vector<double> masses;     // n, sum to 1
};

void validate_sample(const Sample& s);
void validate_histogram(const Histogram& h);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Asymptotic Kolmogorov survival function Q(lambda) = P(K > lambda).
double kolmogorov_survival(double lambda);

KsResult ks_two_sample(const Sample& a, const Sample& b);

// Wasserstein-1 on a shared grid: sum_i |C_a(i) - C_b(i)| * width_i.
double emd_1d(const Histogram& a, const Histogram& b);

// Bins `values` onto `edges`, clamping values outside the range into the end bins.
Histogram histogram_on(const std::vector<double>& values, const std::vector<double>& edges);

enum class ChannelStatus { Pass, Fail, Skipped };
std::string_view to_string(ChannelStatus status);

struct ChannelVerdict {
  std::string channel;
  ChannelStatus status = ChannelStatus::Skipped;
  double statistic = 0.0;
  double threshold = 0.0;
  std::optional<double> p_value;
};

struct ValidationVerdict {
  std::vector<ChannelVerdict> channels;
  bool passed() const;   // no channel failed and at least one was checked
  bool partial() const;  // some channel skipped
  Json to_json() const;
};

struct ValidationThresholds {
  double ks_max = 0.1;
  double emd_max = 0.05;  // fraction of the histogram range
};

struct ValidationChannels {
  std::optional<Sample> input_bytes;
  std::optional<Sample> shuffle_bytes;
  std::optional<Histogram> key_frequency;
};

ValidationVerdict validate_class(const ValidationChannels& generated, const ValidationChannels& reference,
                                 const ValidationThresholds& thresholds = {});

// Delimiter-separated files with a one-line header. Samples take the first
// column; histograms need columns lo, hi, mass.
Sample read_sample_file(const std::filesystem::path& path);
Histogram read_histogram_file(const std::filesystem::path& path);

// Generator-side channels for a subclass: per-job source input bytes, per-job
// shuffle bytes, and relative task load (n * share) pooled over all stages.
struct GeneratedChannels {
  Sample input_bytes;
  Sample shuffle_bytes;
  std::vector<double> relative_task_load;
};
GeneratedChannels generated_channels(const std::vector<JobSpec>& jobs);

}  // namespace scalebench
