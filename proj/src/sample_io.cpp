#include "kolchin/sample_io.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "kolchin/config.hpp"

namespace kolchin {

void write_sample_jsonl(std::ostream& out, const Sample& s) {
  nlohmann::ordered_json j;
  j["iteration"] = s.iteration;
  std::string labels;
  for (Index i = 0; i < s.assignments.size(); ++i) {
    if (i) labels += ',';
    labels += std::to_string(s.assignments[i]);
  }
  j["assignments"] = labels;
  nlohmann::ordered_json hyper = nlohmann::ordered_json::object();
  for (const auto& [name, value] : s.hyper) hyper[name] = value;
  j["hyper"] = hyper;
  j["delta"] = s.delta;
  j["mu"] = s.mu;
  j["log_joint"] = s.log_joint;
  out << j.dump() << '\n';
}

std::vector<Sample> read_samples_jsonl(std::istream& in) {
  std::vector<Sample> out;
  std::string line;
  Index lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Sample s;
      s.iteration = j.at("iteration").get<Index>();
      for (const auto& cell : split(j.at("assignments").get<std::string>(), ',')) {
        const auto v = parse_int(cell, "assignments");
        if (v < 0) throw std::invalid_argument("negative cluster label");
        s.assignments.push_back(static_cast<Index>(v));
      }
      for (const auto& [name, value] : j.at("hyper").items()) {
        s.hyper.emplace_back(name, value.get<double>());
      }
      s.delta = j.value("delta", std::vector<double>{});
      s.mu = j.value("mu", std::vector<double>{});
      s.log_joint = j.at("log_joint").get<double>();
      out.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw std::invalid_argument("samples line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace kolchin
