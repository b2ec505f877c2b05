// Copyright (C) 2026 The qoesim Authors
// SPDX-License-Identifier: Apache-2.0

#include "qoesim/latency_model.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace qoesim {

const char* to_string(PreemptionMechanism mechanism) {
  return mechanism == PreemptionMechanism::kSwap ? "swap" : "recompute";
}

LatencyProfile LatencyProfile::synthetic_default() {
  LatencyProfile profile;
  constexpr std::size_t kLastKnot = 1024;
  profile.decode_points = {
      {1, 0.02 + 0.0008},
      {kLastKnot, 0.02 + 0.0008 * static_cast<double>(kLastKnot)}};
  return profile;
}

void LatencyProfile::validate() const {
  if (decode_points.empty()) {
    throw ConfigError("latency profile: decode_points is empty");
  }
  for (std::size_t i = 0; i < decode_points.size(); ++i) {
    const auto& p = decode_points[i];
    if (p.batch_size == 0) {
      throw ConfigError("latency profile: batch sizes start at 1");
    }
    if (!(p.iteration_latency > 0.0)) {
      throw ConfigError("latency profile: iteration latency must be > 0");
    }
    if (i > 0) {
      if (p.batch_size <= decode_points[i - 1].batch_size) {
        throw ConfigError("latency profile: decode_points must be sorted");
      }
      if (p.iteration_latency < decode_points[i - 1].iteration_latency) {
        throw ConfigError(
            "latency profile: latency must not decrease with batch size");
      }
    }
  }
  if (!(prefill_throughput > 0.0)) {
    throw ConfigError("latency profile: prefill_throughput must be > 0");
  }
  if (!(swap_bandwidth > 0.0)) {
    throw ConfigError("latency profile: swap_bandwidth must be > 0");
  }
  if (kv_capacity == 0) {
    throw ConfigError("latency profile: kv_capacity must be > 0");
  }
  if (!(decode_latency(*this, 1) > 0.0)) {
    throw ConfigError("latency profile: extrapolated latency at B=1 is <= 0");
  }
}

Seconds decode_latency(const LatencyProfile& profile, std::size_t batch_size) {
  const auto& pts = profile.decode_points;
  if (pts.empty()) throw ConfigError("latency profile: decode_points is empty");
  const auto b = static_cast<double>(batch_size);
  auto lerp = [b](const DecodePoint& lo, const DecodePoint& hi) {
    const auto x0 = static_cast<double>(lo.batch_size);
    const auto x1 = static_cast<double>(hi.batch_size);
    return lo.iteration_latency +
           (hi.iteration_latency - lo.iteration_latency) * (b - x0) / (x1 - x0);
  };
  if (pts.size() == 1) return pts.front().iteration_latency;
  if (batch_size >= pts.back().batch_size) return pts.back().iteration_latency;
  if (batch_size <= pts.front().batch_size) return lerp(pts[0], pts[1]);
  const auto hi = std::upper_bound(
      pts.begin(), pts.end(), batch_size,
      [](std::size_t v, const DecodePoint& p) { return v < p.batch_size; });
  return lerp(*(hi - 1), *hi);
}

Seconds prefill_latency(const LatencyProfile& profile, std::size_t input_len) {
  return static_cast<double>(input_len) / profile.prefill_throughput;
}

PreemptionCost preemption_overhead(const LatencyProfile& profile,
                                   std::size_t context_len,
                                   PreemptionMechanism mechanism) {
  if (mechanism == PreemptionMechanism::kRecompute) {
    return {0.0, prefill_latency(profile, context_len)};
  }
  const Seconds move =
      static_cast<double>(context_len) / profile.swap_bandwidth;
  return {move, move};
}

PreemptionMechanism select_mechanism(const LatencyProfile& profile,
                                     std::size_t context_len) {
  const auto swap =
      preemption_overhead(profile, context_len, PreemptionMechanism::kSwap);
  const auto recompute = preemption_overhead(profile, context_len,
                                             PreemptionMechanism::kRecompute);
  return recompute.total() < swap.total() ? PreemptionMechanism::kRecompute
                                          : PreemptionMechanism::kSwap;
}

LatencyProfile parse_profile(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("latency profile: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("latency profile: expected object");
  LatencyProfile profile = LatencyProfile::synthetic_default();
  try {
    if (doc.contains("decode_points")) {
      profile.decode_points.clear();
      for (const auto& item : doc.at("decode_points")) {
        DecodePoint p;
        if (item.is_array()) {
          p.batch_size = item.at(0).get<std::size_t>();
          p.iteration_latency = item.at(1).get<double>();
        } else {
          p.batch_size = item.at("batch_size").get<std::size_t>();
          p.iteration_latency = item.at("latency").get<double>();
        }
        profile.decode_points.push_back(p);
      }
    }
    if (doc.contains("prefill_throughput")) {
      profile.prefill_throughput = doc.at("prefill_throughput").get<double>();
    }
    if (doc.contains("swap_bandwidth")) {
      profile.swap_bandwidth = doc.at("swap_bandwidth").get<double>();
    }
    if (doc.contains("kv_capacity")) {
      profile.kv_capacity = doc.at("kv_capacity").get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("latency profile: ") + e.what());
  }
  profile.validate();
  return profile;
}

LatencyProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open latency profile " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_profile(buffer.str());
}

std::string profile_to_json(const LatencyProfile& profile) {
  nlohmann::json doc;
  doc["decode_points"] = nlohmann::json::array();
  for (const auto& p : profile.decode_points) {
    doc["decode_points"].push_back({p.batch_size, p.iteration_latency});
  }
  doc["prefill_throughput"] = profile.prefill_throughput;
  doc["swap_bandwidth"] = profile.swap_bandwidth;
  doc["kv_capacity"] = profile.kv_capacity;
  return doc.dump(2);
}

}  // namespace qoesim
