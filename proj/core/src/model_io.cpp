#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rgbdt/booster.hpp"
#include "rgbdt/error.hpp"

namespace rgbdt {

namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "robust-gbdt-model";

json loss_to_json(const LossSpec& s) {
  return {{"family", std::string(to_string(s.family))},
          {"r", s.r},
          {"q", s.q},
          {"eta", s.eta},
          {"sce_alpha", s.sce_alpha},
          {"sce_beta", s.sce_beta},
          {"imbalance_factor", s.imbalance_factor},
          {"safeguard", s.safeguard}};
}

LossSpec loss_from_json(const json& j) {
  LossSpec s;
  s.family = parse_loss_family(j.at("family").get<std::string>());
  s.r = j.at("r").get<double>();
  s.q = j.at("q").get<double>();
  s.eta = j.at("eta").get<double>();
  s.sce_alpha = j.at("sce_alpha").get<double>();
  s.sce_beta = j.at("sce_beta").get<double>();
  s.imbalance_factor = j.at("imbalance_factor").get<bool>();
  s.safeguard = j.at("safeguard").get<bool>();
  return s;
}

json tree_config_to_json(const TreeConfig& t) {
  return {{"lambda", t.lambda},
          {"min_samples_leaf", t.min_samples_leaf},
          {"min_sum_hessian", t.min_sum_hessian},
          {"min_gain", t.min_gain},
          {"max_depth", t.max_depth},
          {"max_leaves", t.max_leaves}};
}

TreeConfig tree_config_from_json(const json& j) {
  TreeConfig t;
  t.lambda = j.at("lambda").get<double>();
  t.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  t.min_sum_hessian = j.at("min_sum_hessian").get<double>();
  t.min_gain = j.at("min_gain").get<double>();
  t.max_depth = j.at("max_depth").get<int>();
  t.max_leaves = j.at("max_leaves").get<int>();
  return t;
}

json tree_to_json(const Tree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes()) {
    if (n.is_leaf()) {
      nodes.push_back({{"leaf", n.weight}});
    } else {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"default_left", n.default_left},
                       {"left", n.left},
                       {"right", n.right}});
    }
  }
  return {{"nodes", std::move(nodes)}};
}

Tree tree_from_json(const json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& jn : j.at("nodes")) {
    TreeNode n;
    if (jn.contains("leaf")) {
      n.weight = jn.at("leaf").get<double>();
    } else {
      n.feature = jn.at("feature").get<int>();
      if (n.feature < 0) throw FormatError("negative feature index in split node");
      n.threshold = jn.at("threshold").get<double>();
      n.default_left = jn.at("default_left").get<bool>();
      n.left = jn.at("left").get<int>();
      n.right = jn.at("right").get<int>();
    }
    nodes.push_back(n);
  }
  // Depths are recomputed from the structure.
  Tree checked(nodes);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k].is_leaf()) continue;
    nodes[static_cast<std::size_t>(nodes[k].left)].depth = nodes[k].depth + 1;
    nodes[static_cast<std::size_t>(nodes[k].right)].depth = nodes[k].depth + 1;
  }
  return Tree(std::move(nodes));
}

}  // namespace

std::string serialize(const BoosterModel& model) {
  const auto& c = model.config;
  json doc;
  doc["format"] = kFormatTag;
  doc["version"] = kModelFormatVersion;
  doc["n_classes"] = c.n_classes;
  doc["n_features"] = model.n_features;
  doc["feature_names"] = model.feature_names;
  doc["class_names"] = model.class_names;
  doc["learning_rate"] = c.learning_rate;
  doc["init_score"] = model.init_score;
  doc["loss"] = loss_to_json(c.loss);
  doc["tree_config"] = tree_config_to_json(c.tree);
  doc["training"] = {{"n_rounds", c.n_rounds},
                     {"seed", c.seed},
                     {"subsample", c.subsample},
                     {"force_one_vs_all", c.force_one_vs_all},
                     {"positive_class", c.positive_class},
                     {"early_stopping_rounds",
                      c.early_stopping_rounds ? json(*c.early_stopping_rounds) : json(nullptr)}};
  json lists = json::array();
  for (const auto& list : model.trees) {
    json jl = json::array();
    for (const auto& tree : list) jl.push_back(tree_to_json(tree));
    lists.push_back(std::move(jl));
  }
  doc["trees"] = std::move(lists);
  return doc.dump(1);
}

BoosterModel deserialize(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed model document: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != kFormatTag)
      throw FormatError("not a robust-gbdt model document");
    if (!doc.contains("version") || !doc["version"].is_number_integer())
      throw VersionError("model document has no integer version tag");
    const int version = doc["version"].get<int>();
    if (version != kModelFormatVersion) {
      throw VersionError("unsupported model version " + std::to_string(version) + " (expected " +
                         std::to_string(kModelFormatVersion) + ")");
    }
    BoosterModel model;
    auto& c = model.config;
    c.n_classes = doc.at("n_classes").get<int>();
    model.n_features = doc.at("n_features").get<std::size_t>();
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    model.class_names = doc.at("class_names").get<std::vector<std::string>>();
    c.learning_rate = doc.at("learning_rate").get<double>();
    model.init_score = doc.at("init_score").get<double>();
    c.loss = loss_from_json(doc.at("loss"));
    c.tree = tree_config_from_json(doc.at("tree_config"));
    const auto& tr = doc.at("training");
    c.n_rounds = tr.at("n_rounds").get<int>();
    c.seed = tr.at("seed").get<std::uint64_t>();
    c.subsample = tr.at("subsample").get<double>();
    c.force_one_vs_all = tr.at("force_one_vs_all").get<bool>();
    c.positive_class = tr.at("positive_class").get<int>();
    if (!tr.at("early_stopping_rounds").is_null())
      c.early_stopping_rounds = tr.at("early_stopping_rounds").get<int>();
    c.validate();

    for (const auto& jl : doc.at("trees")) {
      std::vector<Tree> list;
      for (const auto& jt : jl) {
        Tree t = tree_from_json(jt);
        for (const auto& n : t.nodes()) {
          if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= model.n_features)
            throw FormatError("split feature index exceeds n_features");
        }
        list.push_back(std::move(t));
      }
      model.trees.push_back(std::move(list));
    }
    const std::size_t expected_lists =
        (c.n_classes == 2 && !c.force_one_vs_all) ? 1 : static_cast<std::size_t>(c.n_classes);
    if (model.trees.size() != expected_lists) throw FormatError("wrong number of tree lists");
    for (const auto& list : model.trees) {
      if (list.size() != model.trees.front().size())
        throw FormatError("tree lists have different lengths");
    }
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model document: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid configuration in model document: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const BoosterModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model to '" + path.string() + "'");
  out << serialize(model) << '\n';
}

BoosterModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace rgbdt
