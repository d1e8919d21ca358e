#include "tabshift/model_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace tabshift {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

const char* activation_name(Activation act) {
  switch (act) {
    case Activation::identity: return "identity";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh_act: return "tanh";
    case Activation::softmax: return "softmax";
  }
  fail("model file: unknown activation");
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "leaky_relu") return Activation::leaky_relu;
  if (name == "tanh") return Activation::tanh_act;
  if (name == "softmax") return Activation::softmax;
  fail("model file: unknown activation '" + name + "'");
}

// Named double arrays appended to the header in manifest order.
struct ArrayWriter {
  json manifest = json::array();
  std::vector<double> data;

  void add(const std::string& name, const Eigen::MatrixXd& m) {
    manifest.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    data.insert(data.end(), m.data(), m.data() + m.size());
  }
  void add(const std::string& name, const Eigen::VectorXd& v) {
    manifest.push_back({{"name", name}, {"rows", v.size()}, {"cols", 1}});
    data.insert(data.end(), v.data(), v.data() + v.size());
  }
};

struct ArrayReader {
  const json& manifest;
  const std::vector<double>& data;
  std::size_t entry = 0;
  std::size_t at = 0;

  Eigen::MatrixXd take(const std::string& name, long rows, long cols) {
    if (entry >= manifest.size()) fail("model file: missing array '" + name + "'");
    const json& m = manifest[entry++];
    if (m.at("name").get<std::string>() != name) {
      fail("model file: expected array '" + name + "', found '" +
           m.at("name").get<std::string>() + "'");
    }
    if (m.at("rows").get<long>() != rows || m.at("cols").get<long>() != cols) {
      fail("model file: array '" + name + "' has unexpected shape");
    }
    const auto count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    if (at + count > data.size()) fail("model file: array data truncated");
    Eigen::MatrixXd out(rows, cols);
    std::memcpy(out.data(), data.data() + at, count * sizeof(double));
    at += count;
    return out;
  }
  Eigen::VectorXd take_vector(const std::string& name, long size) {
    return take(name, size, 1).col(0);
  }
};

json schema_to_json(const TableSchema& schema) {
  json cols = json::array();
  for (const ColumnSpec& c : schema.columns) {
    cols.push_back({{"name", c.name},
                    {"kind", c.kind == ColumnKind::continuous ? "continuous" : "categorical"},
                    {"categories", c.categories}});
  }
  json out{{"columns", std::move(cols)}};
  if (schema.target) out["target"] = *schema.target;
  return out;
}

TableSchema schema_from_json(const json& j) {
  TableSchema schema;
  for (const json& c : j.at("columns")) {
    ColumnSpec spec;
    spec.name = c.at("name").get<std::string>();
    const std::string kind = c.at("kind").get<std::string>();
    if (kind == "continuous") {
      spec.kind = ColumnKind::continuous;
    } else if (kind == "categorical") {
      spec.kind = ColumnKind::categorical;
    } else {
      fail("model file: unknown column kind '" + kind + "'");
    }
    spec.categories = c.at("categories").get<std::vector<std::string>>();
    schema.columns.push_back(std::move(spec));
  }
  if (j.contains("target")) schema.target = j.at("target").get<std::string>();
  schema.validate(true);
  return schema;
}

json mlp_to_json(const Mlp& net, const std::string& prefix, ArrayWriter& arrays) {
  json layers = json::array();
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    layers.push_back({{"in", layer.in_dim()},
                      {"out", layer.out_dim()},
                      {"act", activation_name(layer.act)},
                      {"leak", layer.leak},
                      {"tau", layer.tau},
                      {"batch_norm", layer.batch_norm}});
    const std::string base = prefix + "." + std::to_string(l);
    arrays.add(base + ".weight", layer.weight);
    arrays.add(base + ".bias", layer.bias);
    if (layer.batch_norm) {
      arrays.add(base + ".bn_gamma", layer.bn_gamma);
      arrays.add(base + ".bn_beta", layer.bn_beta);
      arrays.add(base + ".bn_running_mean", layer.bn_running_mean);
      arrays.add(base + ".bn_running_var", layer.bn_running_var);
    }
  }
  json head = json::array();
  for (const HeadSegment& h : net.head) {
    head.push_back({{"act", activation_name(h.act)},
                    {"offset", h.offset},
                    {"width", h.width},
                    {"tau", h.tau}});
  }
  return json{{"layers", std::move(layers)}, {"head", std::move(head)}};
}

Mlp mlp_from_json(const json& j, const std::string& prefix, ArrayReader& arrays) {
  Mlp net;
  std::size_t l = 0;
  for (const json& jl : j.at("layers")) {
    DenseLayer layer;
    const long in = jl.at("in").get<long>();
    const long out = jl.at("out").get<long>();
    layer.act = activation_from_name(jl.at("act").get<std::string>());
    layer.leak = jl.at("leak").get<double>();
    layer.tau = jl.at("tau").get<double>();
    layer.batch_norm = jl.at("batch_norm").get<bool>();
    const std::string base = prefix + "." + std::to_string(l);
    layer.weight = arrays.take(base + ".weight", out, in);
    layer.bias = arrays.take_vector(base + ".bias", out);
    if (layer.batch_norm) {
      layer.bn_gamma = arrays.take_vector(base + ".bn_gamma", out);
      layer.bn_beta = arrays.take_vector(base + ".bn_beta", out);
      layer.bn_running_mean = arrays.take_vector(base + ".bn_running_mean", out);
      layer.bn_running_var = arrays.take_vector(base + ".bn_running_var", out);
    }
    net.layers.push_back(std::move(layer));
    ++l;
  }
  for (const json& jh : j.at("head")) {
    net.head.push_back({activation_from_name(jh.at("act").get<std::string>()),
                        jh.at("offset").get<int>(), jh.at("width").get<int>(),
                        jh.at("tau").get<double>()});
  }
  net.validate();
  return net;
}

json config_to_json(const CtganConfig& c) {
  return json{{"batch_size", c.batch_size},
              {"noise_dim", c.noise_dim},
              {"generator_hidden", c.generator_hidden},
              {"critic_hidden", c.critic_hidden},
              {"lr", c.lr},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"gp_lambda", c.gp_lambda},
              {"epochs", c.epochs},
              {"n_critic", c.n_critic},
              {"tau", c.tau},
              {"em_m_max", c.transform.em.m_max},
              {"em_tol", c.transform.em.tol},
              {"em_max_iter", c.transform.em.max_iter},
              {"em_prune_weight", c.transform.em.prune_weight},
              {"alpha_clip", c.transform.alpha_clip},
              {"deterministic_modes", c.transform.deterministic_modes}};
}

CtganConfig config_from_json(const json& j) {
  CtganConfig c;
  c.batch_size = j.at("batch_size").get<int>();
  c.noise_dim = j.at("noise_dim").get<int>();
  c.generator_hidden = j.at("generator_hidden").get<std::vector<int>>();
  c.critic_hidden = j.at("critic_hidden").get<std::vector<int>>();
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.gp_lambda = j.at("gp_lambda").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.n_critic = j.at("n_critic").get<int>();
  c.tau = j.at("tau").get<double>();
  c.transform.em.m_max = j.at("em_m_max").get<int>();
  c.transform.em.tol = j.at("em_tol").get<double>();
  c.transform.em.max_iter = j.at("em_max_iter").get<int>();
  c.transform.em.prune_weight = j.at("em_prune_weight").get<double>();
  c.transform.alpha_clip = j.at("alpha_clip").get<double>();
  c.transform.deterministic_modes = j.at("deterministic_modes").get<bool>();
  return c;
}

template <typename T>
void write_raw(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) fail("model file: truncated");
  return value;
}

}  // namespace

void save_model(const CtganModel& model, const std::string& path) {
  ArrayWriter arrays;
  for (int col = 0; col < model.schema.width(); ++col) {
    if (model.schema.column(col).kind != ColumnKind::continuous) continue;
    const ContinuousTransform& t = model.transformer.continuous_transform(col);
    const std::string base = "gmm." + model.schema.column(col).name;
    arrays.add(base + ".weights", t.gmm.weights);
    arrays.add(base + ".means", t.gmm.means);
    arrays.add(base + ".stddevs", t.gmm.stddevs);
  }
  json header{{"schema", schema_to_json(model.schema)},
              {"config", config_to_json(model.config)},
              {"seed", model.seed},
              {"freq_counts", model.freq.counts}};
  header["generator"] = mlp_to_json(model.generator, "generator", arrays);
  header["critic"] = mlp_to_json(model.critic, "critic", arrays);
  header["arrays"] = std::move(arrays.manifest);
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write model file '" + path + "'");
  out.write(kModelMagic, static_cast<std::streamsize>(std::strlen(kModelMagic)));
  out.put('\n');
  write_raw<std::uint32_t>(out, kModelVersion);
  write_raw<std::uint64_t>(out, header_text.size());
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  write_raw<std::uint64_t>(out, arrays.data.size());
  out.write(reinterpret_cast<const char*>(arrays.data.data()),
            static_cast<std::streamsize>(arrays.data.size() * sizeof(double)));
  if (!out) fail("failed writing model file '" + path + "'");
}

CtganModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot read model file '" + path + "'");

  const std::size_t magic_len = std::strlen(kModelMagic);
  std::string magic(magic_len, '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic_len));
  if (!in || magic != kModelMagic || in.get() != '\n') {
    fail("'" + path + "' is not a model file (bad magic)");
  }
  const auto version = read_raw<std::uint32_t>(in);
  if (version != kModelVersion) {
    fail("model file '" + path + "' has unsupported version " + std::to_string(version));
  }
  const auto header_len = read_raw<std::uint64_t>(in);
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) fail("model file: truncated header");
  const auto n_doubles = read_raw<std::uint64_t>(in);
  std::vector<double> data(n_doubles);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(n_doubles * sizeof(double)));
  if (!in) fail("model file: truncated data section");

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    fail(std::string("model file: bad header: ") + e.what());
  }

  CtganModel model;
  model.schema = schema_from_json(header.at("schema"));
  model.config = config_from_json(header.at("config"));
  model.seed = header.at("seed").get<std::uint64_t>();

  ArrayReader arrays{header.at("arrays"), data};
  std::vector<ContinuousTransform> continuous;
  for (int col = 0; col < model.schema.width(); ++col) {
    if (model.schema.column(col).kind != ColumnKind::continuous) continue;
    const std::string base = "gmm." + model.schema.column(col).name;
    // Arrays were written in schema order, so sizes can be probed from the
    // manifest entry at the current cursor.
    if (arrays.entry >= arrays.manifest.size()) fail("model file: missing mixture arrays");
    const long m = arrays.manifest[arrays.entry].at("rows").get<long>();
    ContinuousTransform t;
    t.gmm.weights = arrays.take_vector(base + ".weights", m);
    t.gmm.means = arrays.take_vector(base + ".means", m);
    t.gmm.stddevs = arrays.take_vector(base + ".stddevs", m);
    t.alpha_clip = model.config.transform.alpha_clip;
    t.gmm.validate();
    continuous.push_back(std::move(t));
  }
  model.transformer =
      TableTransformer::from_parts(model.schema, model.config.transform, std::move(continuous));
  model.layout = CondLayout::from_schema(model.schema);
  model.freq.counts = header.at("freq_counts").get<std::vector<std::vector<long>>>();
  if (model.freq.counts.size() != static_cast<std::size_t>(model.layout.n_columns())) {
    fail("model file: frequency table does not match schema");
  }
  // Rebuild the derived log-probabilities from the stored counts.
  for (std::size_t c = 0; c < model.freq.counts.size(); ++c) {
    const std::vector<long>& counts = model.freq.counts[c];
    if (counts.size() !=
        static_cast<std::size_t>(model.layout.category_counts[c])) {
      fail("model file: frequency table does not match schema");
    }
    std::vector<double> probs(counts.size(), 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] < 0) fail("model file: negative category count");
      if (counts[k] > 0) {
        probs[k] = std::log1p(static_cast<double>(counts[k]));
        total += probs[k];
      }
    }
    if (total > 0.0) {
      for (double& p : probs) p /= total;
    }
    model.freq.probs.push_back(std::move(probs));
  }

  model.generator = mlp_from_json(header.at("generator"), "generator", arrays);
  model.critic = mlp_from_json(header.at("critic"), "critic", arrays);
  return model;
}

}  // namespace tabshift
