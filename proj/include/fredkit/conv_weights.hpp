#pragma once

// Partial (dilated) frequency dynamic conv layer weights: a JSON sidecar
// with shapes and hyper-parameters, and a CSV tensor dump with one
// `name,v0,v1,...` row per flattened tensor.

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fredkit/core.hpp"
#include "fredkit/freqconv.hpp"
#include "fredkit/rng.hpp"

namespace fredkit::freqconv {

struct ConvLayerWeights {
  PartialConvConfig partial;
  BasisKernelBank bank;
  AttentionParams attention;

  std::size_t in_channels() const {
    return bank.empty() ? partial.static_kernel.in_channels : bank.in_channels();
  }
  std::size_t out_channels() const {
    return partial.static_kernel.out_channels + bank.out_channels();
  }

  Tensor3 forward(const Tensor3& x) const { return pfd_forward(x, partial, bank, attention); }
};

inline void fill_uniform(std::vector<double>& v, RngStream& rng, double scale) {
  for (double& x : v) x = rng.uniform(-scale, scale);
}

// Random layer with C_dyn = round(proportion * C_out) dynamic channels.
inline ConvLayerWeights random_layer(RngStream& rng, std::size_t in_channels,
                                     std::size_t out_channels, double proportion,
                                     const std::vector<int>& dilations,
                                     double temperature = 31.0) {
  ConvLayerWeights w;
  const std::size_t dyn = PartialConvConfig::dynamic_channels(proportion, out_channels);
  w.partial.proportion = proportion;
  w.partial.static_kernel = ConvKernel(out_channels - dyn, in_channels);
  fill_uniform(w.partial.static_kernel.weights, rng, 1.0);
  fill_uniform(w.partial.static_kernel.bias, rng, 0.5);
  if (dyn > 0) {
    for (int d : dilations) {
      ConvKernel k(dyn, in_channels);
      fill_uniform(k.weights, rng, 1.0);
      fill_uniform(k.bias, rng, 0.5);
      w.bank.kernels.push_back(std::move(k));
      w.bank.freq_dilations.push_back(d);
    }
    w.attention = AttentionParams::zeros(in_channels, dilations.size());
    w.attention.temperature = temperature;
    fill_uniform(w.attention.w1, rng, 1.0);
    fill_uniform(w.attention.b1, rng, 0.5);
    fill_uniform(w.attention.w2, rng, 4.0);
    fill_uniform(w.attention.b2, rng, 1.0);
  }
  return w;
}

struct ConvCase {
  ConvLayerWeights layer;
  Tensor3 input;
};

inline Tensor3 random_input(RngStream& rng, std::size_t channels, std::size_t frames, std::size_t bins) {
  Tensor3 x(channels, frames, bins);
  for (double& v : x.data()) v = rng.uniform(-1.0, 1.0);
  return x;
}

// Random PFD/PDFD layer plus input: K in {1,2,4}, dilations from {1,2,3}
// (half of the K=4 cases use 1/1/2/3), C_in <= 4, T and F <= 12.
inline ConvCase random_case(RngStream& rng) {
  static constexpr std::size_t basis_counts[] = {1, 2, 4};
  static constexpr double proportions[] = {0.125, 0.25, 0.5, 1.0};
  const std::size_t K = basis_counts[rng.uniform_int(0, 2)];
  std::vector<int> dilations;
  if (K == 4 && rng.uniform_int(0, 1) == 1) {
    dilations = {1, 1, 2, 3};
  } else {
    for (std::size_t k = 0; k < K; ++k) dilations.push_back(static_cast<int>(rng.uniform_int(1, 3)));
  }
  const auto in_channels = static_cast<std::size_t>(rng.uniform_int(1, 4));
  const double proportion = proportions[rng.uniform_int(0, 3)];
  std::size_t out_channels = 0;
  do {
    out_channels = static_cast<std::size_t>(rng.uniform_int(1, 8));
  } while (PartialConvConfig::dynamic_channels(proportion, out_channels) == 0);
  const int dmax = *std::max_element(dilations.begin(), dilations.end());
  const auto frames = static_cast<std::size_t>(rng.uniform_int(1, 12));
  const auto bins = static_cast<std::size_t>(rng.uniform_int(dmax + 1, 12));
  ConvCase c{random_layer(rng, in_channels, out_channels, proportion, dilations), {}};
  c.input = random_input(rng, in_channels, frames, bins);
  return c;
}

namespace detail {

inline void append_row(std::string& out, const std::string& name, const std::vector<double>& v) {
  out += name;
  for (double x : v) {
    out += ',';
    out += fredkit::detail::format_shortest(x);
  }
  out += '\n';
}

}  // namespace detail

// Writes `<stem>.json` and `<stem>.csv` side by side; returns the JSON path.
inline std::filesystem::path save_layer(const ConvLayerWeights& w, const std::filesystem::path& json_path) {
  std::filesystem::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  nlohmann::json meta = {
      {"in_channels", w.in_channels()},
      {"out_channels", w.out_channels()},
      {"proportion", w.partial.proportion},
      {"freq_dilations", w.bank.freq_dilations},
      {"attention_hidden", w.attention.hidden},
      {"temperature", w.attention.temperature},
      {"tensors", csv_path.filename().string()},
  };
  std::string csv;
  detail::append_row(csv, "static_weight", w.partial.static_kernel.weights);
  detail::append_row(csv, "static_bias", w.partial.static_kernel.bias);
  std::vector<double> basis_w, basis_b;
  for (const auto& k : w.bank.kernels) {
    basis_w.insert(basis_w.end(), k.weights.begin(), k.weights.end());
    basis_b.insert(basis_b.end(), k.bias.begin(), k.bias.end());
  }
  detail::append_row(csv, "basis_weight", basis_w);
  detail::append_row(csv, "basis_bias", basis_b);
  detail::append_row(csv, "att_w1", w.attention.w1);
  detail::append_row(csv, "att_b1", w.attention.b1);
  detail::append_row(csv, "att_w2", w.attention.w2);
  detail::append_row(csv, "att_b2", w.attention.b2);
  fredkit::detail::write_file(json_path, meta.dump(2) + "\n");
  fredkit::detail::write_file(csv_path, csv);
  return json_path;
}

inline ConvLayerWeights load_layer(const std::filesystem::path& json_path) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(fredkit::detail::read_file(json_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(json_path.string() + ": " + e.what());
  }
  ConvLayerWeights w;
  std::size_t c_in = 0, c_out = 0, hidden = 0;
  std::vector<int> dilations;
  std::string tensors;
  try {
    c_in = meta.at("in_channels").get<std::size_t>();
    c_out = meta.at("out_channels").get<std::size_t>();
    w.partial.proportion = meta.at("proportion").get<double>();
    dilations = meta.at("freq_dilations").get<std::vector<int>>();
    hidden = meta.value("attention_hidden", AttentionParams::default_hidden(c_in));
    w.attention.temperature = meta.value("temperature", 31.0);
    tensors = meta.at("tensors").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(json_path.string() + ": " + e.what());
  }

  std::map<std::string, std::vector<double>> rows;
  const auto text = fredkit::detail::read_file(json_path.parent_path() / tensors);
  auto lines = fredkit::detail::lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cells = fredkit::detail::split(lines[i], ',');
    std::vector<double> v;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      double x = 0.0;
      if (!fredkit::detail::parse_double(cells[c], x))
        throw ValidationError("non-numeric weight" + fredkit::detail::at_line(i + 1) + " of " + tensors);
      v.push_back(x);
    }
    rows[std::string(cells[0])] = std::move(v);
  }
  auto take = [&](const char* name, std::size_t expected) {
    auto it = rows.find(name);
    std::vector<double> v = it == rows.end() ? std::vector<double>{} : it->second;
    if (v.size() != expected)
      throw ValidationError(std::string("tensor ") + name + " has " + std::to_string(v.size()) +
                            " values, expected " + std::to_string(expected));
    return v;
  };

  const std::size_t dyn = PartialConvConfig::dynamic_channels(w.partial.proportion, c_out);
  if (dyn == 0 && !dilations.empty())
    throw ValidationError("proportion yields no dynamic channels but dilations are given");
  if (dyn > 0 && dilations.empty()) throw ValidationError("dynamic channels need basis dilations");
  const std::size_t per_kernel = dyn * c_in * kTaps * kTaps;
  w.partial.static_kernel = ConvKernel(c_out - dyn, c_in);
  w.partial.static_kernel.weights = take("static_weight", (c_out - dyn) * c_in * kTaps * kTaps);
  w.partial.static_kernel.bias = take("static_bias", c_out - dyn);
  const std::size_t K = dilations.size();
  auto bw = take("basis_weight", K * per_kernel);
  auto bb = take("basis_bias", K * dyn);
  for (std::size_t k = 0; k < K; ++k) {
    ConvKernel kern(dyn, c_in);
    std::copy_n(bw.begin() + static_cast<std::ptrdiff_t>(k * per_kernel), per_kernel, kern.weights.begin());
    std::copy_n(bb.begin() + static_cast<std::ptrdiff_t>(k * dyn), dyn, kern.bias.begin());
    w.bank.kernels.push_back(std::move(kern));
  }
  w.bank.freq_dilations = dilations;
  w.bank.validate();
  if (K > 0) {
    const double temperature = w.attention.temperature;
    w.attention = AttentionParams::zeros(c_in, K, hidden);
    w.attention.temperature = temperature;
    w.attention.w1 = take("att_w1", hidden * c_in);
    w.attention.b1 = take("att_b1", hidden);
    w.attention.w2 = take("att_w2", K * hidden);
    w.attention.b2 = take("att_b2", K);
    w.attention.validate();
  }
  return w;
}

}  // namespace fredkit::freqconv
