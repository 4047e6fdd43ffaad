#pragma once

#include <cstddef>
#include <span>

namespace flowldp {

double normal_cdf(double x);
// Upper tail 1 - N_cdf(x), accurate far into the tail.
double normal_sf(double x);

struct WilsonInterval {
  double center;
  double half_width;  // reported as the standard error (z = 1)
};

WilsonInterval wilson_interval(std::size_t hits, std::size_t trials, double z = 1.0);

struct KsResult {
  double statistic;  // sup |F_a - F_b|
  double p_value;
};

// Two-sample Kolmogorov–Smirnov test with the asymptotic Kolmogorov law
// (Stephens' small-sample correction).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Kolmogorov survival function Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_sf(double x);

struct MeanEstimate {
  double mean;
  double std_error;
};

MeanEstimate mean_and_stderr(std::span<const double> xs);

}  // namespace flowldp
