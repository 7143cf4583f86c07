#pragma once

// Versioned CSV serialization of iteration records.
//
// Numbers are written with shortest round-trip formatting (std::to_chars),
// which makes byte-identical traces achievable for identical configs and
// lossless reload guaranteed. The header row is exactly the record field
// list; coordinates of x are packed into one cell, ';'-separated.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ncstep/solver.hpp"

namespace ncstep {
namespace trace {

inline constexpr int kSchemaVersion = 1;

inline constexpr std::string_view kHeader =
    "k,fevals_so_far,x,f_true,fhat_true,F_est,grad_true_norm,g_est_norm,"
    "lambda_true,lambda_hat_true,lambda_est,alpha_k,beta_k,alpha_next,beta_next,"
    "omega_g,omega_H,theta_g,theta_H,i_f,i_g,i_g_draw,ihat_f,i_H,i_H_lin,"
    "sign_choice";

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc())
    throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("parse_double: bad field '" + std::string(s) + "'");
  return v;
}

inline long parse_long(std::string_view s) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("parse_long: bad field '" + std::string(s) + "'");
  return v;
}

inline std::string format_vector(const Eigen::VectorXd& x) {
  std::string out;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) out += ';';
    out += format_double(x[i]);
  }
  return out;
}

inline Eigen::VectorXd parse_vector(std::string_view cell) {
  std::vector<double> vals;
  size_t start = 0;
  while (start <= cell.size()) {
    const size_t sep = cell.find(';', start);
    const std::string_view piece =
        cell.substr(start, sep == std::string_view::npos ? cell.size() - start
                                                         : sep - start);
    vals.push_back(parse_double(piece));
    if (sep == std::string_view::npos) break;
    start = sep + 1;
  }
  Eigen::VectorXd x(static_cast<Eigen::Index>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) x[static_cast<Eigen::Index>(i)] = vals[i];
  return x;
}

inline std::string record_to_csv(const IterationRecord& r) {
  std::string line;
  line.reserve(256);
  auto add = [&line](const std::string& s) {
    if (!line.empty()) line += ',';
    line += s;
  };
  add(std::to_string(r.k));
  add(std::to_string(r.fevals_so_far));
  add(format_vector(r.x));
  add(format_double(r.f_true));
  add(format_double(r.fhat_true));
  add(format_double(r.F_est));
  add(format_double(r.grad_true_norm));
  add(format_double(r.g_est_norm));
  add(format_double(r.lambda_true));
  add(format_double(r.lambda_hat_true));
  add(format_double(r.lambda_est));
  add(format_double(r.alpha_k));
  add(format_double(r.beta_k));
  add(format_double(r.alpha_next));
  add(format_double(r.beta_next));
  add(r.omega_g ? "1" : "0");
  add(r.omega_H ? "1" : "0");
  add(r.theta_g ? "1" : "0");
  add(r.theta_H ? "1" : "0");
  add(r.i_f ? "1" : "0");
  add(r.i_g ? "1" : "0");
  add(r.i_g_draw ? "1" : "0");
  add(r.ihat_f ? "1" : "0");
  add(r.i_H ? "1" : "0");
  add(r.i_H_lin ? "1" : "0");
  add(std::to_string(r.sign_choice));
  return line;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  size_t start = 0;
  while (start <= line.size()) {
    const size_t sep = line.find(',', start);
    if (sep == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, sep - start));
    start = sep + 1;
  }
  return cells;
}

inline IterationRecord record_from_csv(std::string_view line) {
  const auto cells = split_csv(line);
  if (cells.size() != 26)
    throw std::runtime_error("trace row has " + std::to_string(cells.size()) +
                             " fields, expected 26");
  IterationRecord r;
  size_t i = 0;
  r.k = parse_long(cells[i++]);
  r.fevals_so_far = parse_long(cells[i++]);
  r.x = parse_vector(cells[i++]);
  r.f_true = parse_double(cells[i++]);
  r.fhat_true = parse_double(cells[i++]);
  r.F_est = parse_double(cells[i++]);
  r.grad_true_norm = parse_double(cells[i++]);
  r.g_est_norm = parse_double(cells[i++]);
  r.lambda_true = parse_double(cells[i++]);
  r.lambda_hat_true = parse_double(cells[i++]);
  r.lambda_est = parse_double(cells[i++]);
  r.alpha_k = parse_double(cells[i++]);
  r.beta_k = parse_double(cells[i++]);
  r.alpha_next = parse_double(cells[i++]);
  r.beta_next = parse_double(cells[i++]);
  r.omega_g = cells[i++] == "1";
  r.omega_H = cells[i++] == "1";
  r.theta_g = cells[i++] == "1";
  r.theta_H = cells[i++] == "1";
  r.i_f = cells[i++] == "1";
  r.i_g = cells[i++] == "1";
  r.i_g_draw = cells[i++] == "1";
  r.ihat_f = cells[i++] == "1";
  r.i_H = cells[i++] == "1";
  r.i_H_lin = cells[i++] == "1";
  r.sign_choice = static_cast<int>(parse_long(cells[i++]));
  return r;
}

inline void write_trace(std::ostream& os, const std::vector<IterationRecord>& records) {
  os << "# ncstep-trace v" << kSchemaVersion << '\n' << kHeader << '\n';
  for (const auto& r : records) os << record_to_csv(r) << '\n';
}

inline void write_trace_file(const std::string& path,
                             const std::vector<IterationRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open trace for writing: " + path);
  write_trace(os, records);
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::vector<IterationRecord> read_trace(std::istream& is) {
  std::vector<IterationRecord> records;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kHeader)
        throw std::runtime_error("trace header does not match schema v" +
                                 std::to_string(kSchemaVersion));
      header_seen = true;
      continue;
    }
    records.push_back(record_from_csv(line));
  }
  if (!header_seen) throw std::runtime_error("trace has no header row");
  return records;
}

inline std::vector<IterationRecord> read_trace_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open trace: " + path);
  return read_trace(is);
}

/// Reconstruct the step size sequences from (alpha0, beta0, tau) and the
/// success flags, mirroring the solver's update expressions so the replay is
/// bit-exact. `shared_sequence` corresponds to the CG variant where one
/// sequence drives both step kinds.
inline bool replay_step_sizes(const std::vector<IterationRecord>& records,
                              double alpha0, double beta0, double tau,
                              bool shared_sequence) {
  double alpha = alpha0;
  double beta = shared_sequence ? alpha0 : beta0;
  for (const auto& r : records) {
    if (r.alpha_k != alpha || r.beta_k != beta) return false;
    double alpha_next = alpha;
    double beta_next = beta;
    if (shared_sequence) {
      if (r.omega_g)
        alpha_next = r.theta_g ? alpha / tau : tau * alpha;
      else if (r.omega_H)
        alpha_next = r.theta_H ? alpha / tau : tau * alpha;
      beta_next = alpha_next;
    } else {
      if (r.omega_g) alpha_next = r.theta_g ? alpha / tau : tau * alpha;
      if (r.omega_H) beta_next = r.theta_H ? beta / tau : tau * beta;
    }
    if (r.alpha_next != alpha_next || r.beta_next != beta_next) return false;
    alpha = alpha_next;
    beta = beta_next;
  }
  return true;
}

}  // namespace trace
}  // namespace ncstep
