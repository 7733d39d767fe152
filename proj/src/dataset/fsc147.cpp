// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/dataset/fsc147.hpp"

#include "countx/io/image_io.hpp"
#include "countx/text/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace countx::data {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path, const json::parser_callback_t& cb = nullptr) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  try {
    return json::parse(in, cb);
  } catch (const json::parse_error& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

CountStats count_stats(const std::vector<std::size_t>& counts) {
  CountStats s;
  s.samples = counts.size();
  if (counts.empty()) return s;
  s.min = *std::min_element(counts.begin(), counts.end());
  s.max = *std::max_element(counts.begin(), counts.end());
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  s.mean = total / static_cast<double>(counts.size());
  return s;
}

json stats_json(const CountStats& s) {
  return {{"samples", s.samples}, {"min", s.min}, {"max", s.max}, {"mean", s.mean}};
}

std::size_t word_count(const std::string& text) {
  std::istringstream in(text);
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

}  // namespace

const std::vector<SampleRecord>& DatasetIndex::split(const std::string& name) const {
  const auto it = splits.find(name);
  if (it == splits.end()) throw ConfigError("dataset has no split named '" + name + "'");
  return it->second;
}

std::size_t DatasetIndex::total() const {
  std::size_t n = 0;
  for (const auto& [_, records] : splits) n += records.size();
  return n;
}

Fsc147Layout Fsc147Layout::from_root(const std::filesystem::path& root,
                                     const std::filesystem::path& descriptions) {
  Fsc147Layout l;
  l.images_dir = root / "images_384_VarV2";
  l.annotations = root / "annotation_FSC147_384.json";
  l.splits = root / "Train_Test_Val_FSC_147.json";
  const auto classes = root / "ImageClasses_FSC147.txt";
  if (std::filesystem::exists(classes)) l.classes = classes;
  l.descriptions = descriptions.empty() ? root / "FSC-147-D.json" : descriptions;
  return l;
}

std::map<std::string, std::string> load_descriptions(const std::filesystem::path& path) {
  std::vector<std::string> duplicates;
  std::set<std::string> seen;
  const json j = read_json(path, [&](int depth, json::parse_event_t event, json& parsed) {
    if (depth == 1 && event == json::parse_event_t::key) {
      const auto key = parsed.get<std::string>();
      if (!seen.insert(key).second) duplicates.push_back(key);
    }
    return true;
  });
  if (!j.is_object()) throw LoadError(path.string() + ": descriptions must be a JSON object");
  std::vector<std::string> offenders;
  for (const auto& d : duplicates) offenders.push_back(d + ": duplicate key");
  std::map<std::string, std::string> out;
  for (const auto& [name, value] : j.items()) {
    std::string text;
    if (value.is_string())
      text = value.get<std::string>();
    else if (value.is_object() && value.contains("text_description") && value["text_description"].is_string())
      text = value["text_description"].get<std::string>();
    else {
      offenders.push_back(name + ": unrecognized description entry");
      continue;
    }
    if (clean_text(text).empty()) offenders.push_back(name + ": empty description");
    out[name] = text;
  }
  if (!offenders.empty()) throw ValidationError(path.string() + ": invalid descriptions", offenders);
  return out;
}

std::map<std::string, DotAnnotation> load_annotations(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (!j.is_object()) throw LoadError(path.string() + ": annotations must be a JSON object");
  std::map<std::string, DotAnnotation> out;
  for (const auto& [name, value] : j.items()) {
    const json& pts = value.is_object() ? value.at("points") : value;
    if (!pts.is_array()) throw LoadError(path.string() + ": " + name + ": points must be a list");
    DotAnnotation dots;
    for (const auto& p : pts) {
      if (!p.is_array() || p.size() < 2) throw LoadError(path.string() + ": " + name + ": malformed point");
      dots.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    out.emplace(name, std::move(dots));
  }
  return out;
}

DatasetIndex load_fsc147(const Fsc147Layout& layout) {
  const auto annotations = load_annotations(layout.annotations);
  const auto descriptions = load_descriptions(layout.descriptions);
  std::map<std::string, std::string> classes;
  if (!layout.classes.empty()) {
    std::ifstream in(layout.classes);
    if (!in) throw LoadError("cannot open " + layout.classes.string());
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto tab = line.find('\t');
      if (tab == std::string::npos) continue;
      classes[line.substr(0, tab)] = line.substr(tab + 1);
    }
  }
  const json split_json = read_json(layout.splits);
  if (!split_json.is_object()) throw LoadError(layout.splits.string() + ": splits must be a JSON object");

  DatasetIndex index;
  std::vector<std::string> offenders;
  std::map<std::string, std::set<std::string>> class_splits;
  for (const auto& [split, names] : split_json.items()) {
    auto& records = index.splits[split];
    for (const auto& n : names) {
      const std::string name = n.get<std::string>();
      SampleRecord r;
      r.filename = name;
      r.image_path = layout.images_dir / name;
      const auto a = annotations.find(name);
      const auto d = descriptions.find(name);
      bool ok = true;
      if (a == annotations.end()) offenders.push_back(name + ": no dot annotation"), ok = false;
      if (d == descriptions.end()) offenders.push_back(name + ": no description"), ok = false;
      if (!std::filesystem::exists(r.image_path)) {
        offenders.push_back(name + ": image file missing");
        ok = false;
      } else {
        try {
          const auto info = io::probe_image(r.image_path);
          r.size = {info.width, info.height};
        } catch (const Error& e) {
          offenders.push_back(name + ": " + e.what());
          ok = false;
        }
      }
      if (!ok) continue;
      r.dots = a->second;
      r.description = d->second;
      const auto c = classes.find(name);
      r.class_name = c != classes.end() ? c->second : clean_text(r.description);
      class_splits[r.class_name].insert(split);
      records.push_back(std::move(r));
    }
  }
  for (const auto& [cls, splits] : class_splits)
    if (splits.size() > 1) {
      std::string where;
      for (const auto& s : splits) where += (where.empty() ? "" : ", ") + s;
      offenders.push_back("class '" + cls + "' appears in splits " + where);
    }
  if (!offenders.empty()) throw ValidationError("dataset failed to load", offenders);
  return index;
}

json DatasetReport::to_json() const {
  json j;
  for (const auto& [name, s] : splits)
    j["splits"][name] = {{"samples", s.samples}, {"classes", s.classes}, {"counts", stats_json(s.counts)}};
  j["counts"] = stats_json(counts);
  json words = json::object();
  for (const auto& [w, n] : description_words) words[std::to_string(w)] = n;
  j["description_words"] = words;
  j["the_prefix_fraction"] = the_prefix_fraction;
  j["violations"] = violations;
  return j;
}

DatasetReport validate_dataset(const DatasetIndex& index, const ValidationOptions& options) {
  DatasetReport report;
  std::vector<std::size_t> all_counts;
  std::size_t descriptions = 0, the_prefix = 0;
  std::map<std::string, std::set<std::string>> class_splits;
  for (const auto& [split, records] : index.splits) {
    std::vector<std::size_t> counts;
    std::set<std::string> split_classes;
    for (const auto& r : records) {
      counts.push_back(r.dots.size());
      split_classes.insert(r.class_name);
      class_splits[r.class_name].insert(split);
      const std::string text = clean_text(r.description);
      if (text.empty()) report.violations.push_back(r.filename + ": empty description");
      ++descriptions;
      if (text.starts_with("the ")) ++the_prefix;
      ++report.description_words[word_count(text)];
      if (r.dots.size() < options.min_count)
        report.violations.push_back(r.filename + ": " + std::to_string(r.dots.size()) + " dots, fewer than " +
                                    std::to_string(options.min_count));
      std::size_t outside = 0;
      for (const auto& p : r.dots.points) outside += in_bounds(p, r.size) ? 0 : 1;
      if (outside > 0)
        report.violations.push_back(r.filename + ": " + std::to_string(outside) + " dots outside the " +
                                    std::to_string(r.size.width) + "x" + std::to_string(r.size.height) +
                                    " image");
    }
    all_counts.insert(all_counts.end(), counts.begin(), counts.end());
    report.splits[split] = {records.size(), split_classes.size(), count_stats(counts)};
  }
  for (const auto& [cls, splits] : class_splits)
    if (splits.size() > 1) report.violations.push_back("class '" + cls + "' appears in more than one split");
  report.counts = count_stats(all_counts);
  report.the_prefix_fraction = descriptions ? static_cast<double>(the_prefix) / descriptions : 0.0;
  return report;
}

LoadedSample load_sample(const SampleRecord& record) {
  LoadedSample s;
  s.image = io::read_image(record.image_path);
  s.id = record.filename;
  s.description = record.description;
  s.dots = record.dots;
  const double xmax = std::nextafter(static_cast<double>(s.image.width), 0.0);
  const double ymax = std::nextafter(static_cast<double>(s.image.height), 0.0);
  for (auto& p : s.dots.points) {
    p.x = std::clamp(p.x, 0.0, xmax);
    p.y = std::clamp(p.y, 0.0, ymax);
  }
  return s;
}

}  // namespace countx::data
