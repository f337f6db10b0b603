#include "flmimo/config_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace flmimo {

NetworkConfig NetworkConfig::reference() {
  NetworkConfig c;
  c.noise_w = std::pow(10.0, (-92.0 - 30.0) / 10.0);  // -92 dBm
  c.rho_d = 10.0 / c.noise_w;
  c.rho_u = 0.2 / c.noise_w;
  c.rho_p = 0.2 / c.noise_w;
  c.tau_dp = c.K;
  c.tau_up = c.K;
  return c;
}

void NetworkConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (M < 1 || K < 1) fail("M and K must be >= 1");
  if (M < K) fail("zero-forcing requires M >= K");
  if (tau_dp < K || tau_up < K) fail("pilot lengths must be >= K");
  if (!(tau_dp < tau_c) || !(tau_up < tau_c)) fail("pilot lengths must be < tau_c");
  if (!(side_km > 0)) fail("side_km must be positive");
  if (!(bandwidth_hz > 0)) fail("bandwidth_hz must be positive");
  if (!(rho_d > 0) || !(rho_u > 0) || !(rho_p > 0)) fail("powers must be positive");
  if (!(noise_w > 0)) fail("noise_w must be positive");
  if (!(s_d_bits > 0) || !(s_u_bits > 0)) fail("payload sizes must be positive");
  if (!(t_qos_s > 0)) fail("t_qos_s must be positive");
  if (L < 1) fail("L must be >= 1");
  if (!(alpha > 0)) fail("alpha must be positive");
  if (!(f_max > 0)) fail("f_max must be positive");
  auto check_vec = [&](const std::vector<double>& v, const char* name) {
    if (v.empty()) fail(std::string(name) + " must not be empty");
    if (v.size() != 1 && v.size() != static_cast<size_t>(K))
      fail(std::string(name) + " must be scalar or one value per UE");
    for (double x : v)
      if (!(x > 0)) fail(std::string(name) + " entries must be positive");
  };
  check_vec(d_k_samples, "d_k_samples");
  check_vec(c_k_cycles, "c_k_cycles");
}

namespace {

std::vector<double> parse_list(const std::string& value, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t pos = 0;
    double x = std::stod(item, &pos);
    while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
    if (pos != item.size()) throw std::invalid_argument("config: bad number in " + key);
    out.push_back(x);
  }
  if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
  return out;
}

}  // namespace

NetworkConfig load_config(std::istream& is) {
  NetworkConfig c = NetworkConfig::reference();
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = true;
      for (char ch : line)
        if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
      if (blank) continue;
      throw std::invalid_argument("config: missing '=' at line " + std::to_string(lineno));
    }
    auto trim = [](std::string s) {
      const char* ws = " \t\r\n";
      const size_t b = s.find_first_not_of(ws);
      if (b == std::string::npos) return std::string();
      const size_t e = s.find_last_not_of(ws);
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config: empty key or value at line " + std::to_string(lineno));

    auto num = [&]() {
      size_t pos = 0;
      double x = std::stod(value, &pos);
      if (pos != value.size())
        throw std::invalid_argument("config: bad number for " + key);
      return x;
    };
    if (key == "M") c.M = static_cast<int>(num());
    else if (key == "K") c.K = static_cast<int>(num());
    else if (key == "side_km") c.side_km = num();
    else if (key == "tau_c") c.tau_c = num();
    else if (key == "tau_dp") c.tau_dp = num();
    else if (key == "tau_up") c.tau_up = num();
    else if (key == "bandwidth_hz") c.bandwidth_hz = num();
    else if (key == "rho_d") c.rho_d = num();
    else if (key == "rho_u") c.rho_u = num();
    else if (key == "rho_p") c.rho_p = num();
    else if (key == "noise_w") c.noise_w = num();
    else if (key == "s_d_bits") c.s_d_bits = num();
    else if (key == "s_u_bits") c.s_u_bits = num();
    else if (key == "t_qos_s") c.t_qos_s = num();
    else if (key == "L") c.L = static_cast<int>(num());
    else if (key == "alpha") c.alpha = num();
    else if (key == "f_max") c.f_max = num();
    else if (key == "d_k_samples") c.d_k_samples = parse_list(value, key);
    else if (key == "c_k_cycles") c.c_k_cycles = parse_list(value, key);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

NetworkConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config: cannot open '" + path + "'");
  return load_config(f);
}

void write_config(std::ostream& os, const NetworkConfig& c) {
  char buf[128];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s = %.10g\n", key, v);
    os << buf;
  };
  os << "M = " << c.M << "\nK = " << c.K << "\n";
  put("side_km", c.side_km);
  put("tau_c", c.tau_c);
  put("tau_dp", c.tau_dp);
  put("tau_up", c.tau_up);
  put("bandwidth_hz", c.bandwidth_hz);
  put("rho_d", c.rho_d);
  put("rho_u", c.rho_u);
  put("rho_p", c.rho_p);
  put("noise_w", c.noise_w);
  put("s_d_bits", c.s_d_bits);
  put("s_u_bits", c.s_u_bits);
  put("t_qos_s", c.t_qos_s);
  os << "L = " << c.L << "\n";
  put("alpha", c.alpha);
  put("f_max", c.f_max);
  auto put_list = [&](const char* key, const std::vector<double>& v) {
    os << key << " = ";
    for (size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s%.10g", i ? "," : "", v[i]);
      os << buf;
    }
    os << "\n";
  };
  put_list("d_k_samples", c.d_k_samples);
  put_list("c_k_cycles", c.c_k_cycles);
}

}  // namespace flmimo
