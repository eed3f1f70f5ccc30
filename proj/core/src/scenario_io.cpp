#include "rcmhqp/scenario_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <system_error>

#include "rcmhqp/error.hpp"

namespace rcmhqp {

namespace {

using nlohmann::json;

// Maps JSON pointers ("/chain/joints/2/q_min") to the line where the value
// starts. Only run on text that already parsed successfully.
class LineIndex {
 public:
  explicit LineIndex(std::string_view text) : text_(text) {
    skip_ws();
    value("");
  }

  int line_of(const std::string& pointer) const {
    auto it = lines_.find(pointer);
    return it == lines_.end() ? 1 : it->second;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r' ||
                                   text_[pos_] == '\n')) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string string_token() {
    std::string out;
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') ++pos_;
      if (pos_ < text_.size()) out.push_back(text_[pos_++]);
    }
    ++pos_;
    return out;
  }

  void value(const std::string& pointer) {
    lines_.emplace(pointer, line_);
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != '}') {
        const std::string key = string_token();
        skip_ws();
        ++pos_;  // ':'
        skip_ws();
        value(pointer + "/" + key);
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          skip_ws();
        }
      }
      ++pos_;
    } else if (c == '[') {
      ++pos_;
      skip_ws();
      for (int index = 0; pos_ < text_.size() && text_[pos_] != ']'; ++index) {
        value(pointer + "/" + std::to_string(index));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          skip_ws();
        }
      }
      ++pos_;
    } else if (c == '"') {
      string_token();
    } else {
      while (pos_ < text_.size() && std::string_view(",]} \t\r\n").find(text_[pos_]) == std::string_view::npos) {
        ++pos_;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

struct Context {
  std::string source;
  const LineIndex& lines;

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    const std::string where = pointer.empty() ? "/" : pointer;
    throw ConfigError(source + ":" + std::to_string(lines.line_of(pointer)) + ": " + where + ": " + message);
  }
};

// Typed access to one JSON node with location-aware errors.
class Node {
 public:
  Node(const json& value, std::string pointer, const Context& ctx)
      : value_(value), pointer_(std::move(pointer)), ctx_(ctx) {}

  bool has(const std::string& key) const { return value_.is_object() && value_.contains(key); }

  Node at(const std::string& key) const {
    if (!value_.is_object()) fail("expected an object");
    if (!value_.contains(key)) fail("missing required key '" + key + "'");
    return Node(value_.at(key), pointer_ + "/" + key, ctx_);
  }

  Node at(std::size_t index) const {
    return Node(value_.at(index), pointer_ + "/" + std::to_string(index), ctx_);
  }

  std::size_t size() const {
    if (!value_.is_array()) fail("expected an array");
    return value_.size();
  }

  bool is_string() const { return value_.is_string(); }

  double number() const {
    if (!value_.is_number()) fail("expected a number");
    return value_.get<double>();
  }

  long long integer() const {
    if (!value_.is_number_integer()) fail("expected an integer");
    return value_.get<long long>();
  }

  bool boolean() const {
    if (!value_.is_boolean()) fail("expected true or false");
    return value_.get<bool>();
  }

  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }

  Eigen::VectorXd vector(std::optional<std::size_t> expected = std::nullopt) const {
    const std::size_t n = size();
    if (expected && n != *expected) {
      fail("expected " + std::to_string(*expected) + " numbers, got " + std::to_string(n));
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = at(i).number();
    return v;
  }

  Eigen::Vector3d vec3() const { return vector(3); }

  double number_or(const std::string& key, double fallback) const {
    return has(key) ? at(key).number() : fallback;
  }

  [[noreturn]] void fail(const std::string& message) const { ctx_.fail(pointer_, message); }

  const std::string& pointer() const { return pointer_; }

 private:
  const json& value_;
  std::string pointer_;
  const Context& ctx_;
};

Pose parse_pose(const Node& node) {
  const Eigen::Vector3d position = node.has("position") ? node.at("position").vec3() : Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  if (node.has("quaternion")) {
    const Eigen::VectorXd wxyz = node.at("quaternion").vector(4);
    rotation = Eigen::Quaterniond(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
  }
  try {
    return Pose::from_quaternion(position, rotation);
  } catch (const ConfigError& e) {
    node.fail(e.what());
  }
}

KinematicChain parse_chain(const Node& node) {
  if (node.is_string()) {
    const std::string name = node.string();
    if (name == "default_6r") return KinematicChain::default_6r();
    node.fail("unknown built-in chain '" + name + "'");
  }
  const Node joints_node = node.at("joints");
  std::vector<JointSpec> joints;
  for (std::size_t i = 0; i < joints_node.size(); ++i) {
    const Node j = joints_node.at(i);
    JointSpec spec;
    spec.a = j.at("a").number();
    spec.alpha = j.at("alpha").number();
    spec.d = j.at("d").number();
    spec.theta_offset = j.number_or("theta_offset", 0.0);
    spec.q_min = j.at("q_min").number();
    spec.q_max = j.at("q_max").number();
    if (!(spec.q_min < spec.q_max)) j.fail("q_min must be smaller than q_max");
    joints.push_back(spec);
  }
  const Pose tool = parse_pose(node.at("tool_transform"));
  const Pose camera = node.has("camera_mount") ? parse_pose(node.at("camera_mount")) : tool;
  std::optional<std::size_t> pre;
  if (node.has("pre_rcm_frame")) {
    const long long frame = node.at("pre_rcm_frame").integer();
    if (frame < 0) node.at("pre_rcm_frame").fail("frame index must be >= 0");
    pre = static_cast<std::size_t>(frame);
  }
  try {
    return KinematicChain(std::move(joints), tool, camera, pre);
  } catch (const ConfigError& e) {
    node.fail(e.what());
  }
}

std::vector<Marker> parse_markers(const Node& root, const Eigen::Vector3d& trocar) {
  if (root.has("markers")) {
    const Node list = root.at("markers");
    std::vector<Marker> markers;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Node m = list.at(i);
      markers.push_back({static_cast<int>(m.at("id").integer()), m.at("xyz").vec3()});
    }
    if (markers.empty()) list.fail("at least one marker is required");
    return markers;
  }
  if (root.has("marker_layout")) {
    const Node layout = root.at("marker_layout");
    const std::string type = layout.at("type").string();
    if (type != "square") layout.at("type").fail("unknown layout type '" + type + "' (expected 'square')");
    try {
      return square_marker_layout(trocar, layout.at("axis").vec3(), layout.at("first_edge").vec3(),
                                  layout.number_or("depth", 0.08), layout.number_or("side", 0.02),
                                  layout.has("first_id") ? static_cast<int>(layout.at("first_id").integer()) : 1);
    } catch (const ConfigError& e) {
      layout.fail(e.what());
    }
  }
  root.fail("missing required key 'markers' (or 'marker_layout')");
}

std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
  int line = 1, column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

void append_number(std::string& out, double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, res.ptr);
}

}  // namespace

Scenario parse_scenario(std::string_view text, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string msg = e.what();
    // Drop the library prefix, keep the description.
    if (const auto colon = msg.find("syntax error"); colon != std::string::npos) msg = msg.substr(colon);
    throw ConfigError(std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg);
  }

  const LineIndex lines(text);
  const Context ctx{std::string(source), lines};
  const Node root(doc, "", ctx);
  if (!doc.is_object()) root.fail("scenario must be a JSON object");

  Scenario s;
  if (root.has("name")) s.name = root.at("name").string();
  s.dt = root.number_or("dt", s.dt);
  if (!(s.dt > 0.0)) root.at("dt").fail("dt must be positive");
  s.max_duration = root.number_or("max_duration", s.max_duration);
  if (!(s.max_duration > 0.0)) root.at("max_duration").fail("max_duration must be positive");
  if (root.has("seed")) {
    const long long seed = root.at("seed").integer();
    if (seed < 0) root.at("seed").fail("seed must be >= 0");
    s.seed = static_cast<std::uint64_t>(seed);
  }

  s.chain = parse_chain(root.at("chain"));
  s.trocar.position = root.at("trocar").vec3();

  if (root.has("camera")) {
    const Node cam = root.at("camera");
    s.intrinsics.focal = cam.number_or("focal", s.intrinsics.focal);
    s.intrinsics.width = cam.has("width") ? static_cast<int>(cam.at("width").integer()) : s.intrinsics.width;
    s.intrinsics.height = cam.has("height") ? static_cast<int>(cam.at("height").integer()) : s.intrinsics.height;
    s.intrinsics.cu = cam.number_or("cu", s.intrinsics.width / 2.0);
    s.intrinsics.cv = cam.number_or("cv", s.intrinsics.height / 2.0);
    try {
      s.intrinsics.validate();
    } catch (const ConfigError& e) {
      cam.fail(e.what());
    }
  }

  s.markers = parse_markers(root, s.trocar.position);

  const Node q0 = root.at("initial_q");
  s.initial_q = q0.vector(s.chain.dof());

  s.gains = HqpGains::defaults(s.dt);
  if (root.has("gains")) {
    const Node g = root.at("gains");
    s.gains.k_rcm = g.number_or("k_rcm", s.gains.k_rcm);
    s.gains.k_vis = g.number_or("k_vis", s.gains.k_vis);
    s.gains.svd_tolerance = g.number_or("svd_tolerance", s.gains.svd_tolerance);
    try {
      s.gains.validate();
    } catch (const ConfigError& e) {
      g.fail(e.what());
    }
  }
  if (root.has("qp")) {
    const Node qp = root.at("qp");
    s.qp_settings.eps_primal = qp.number_or("eps_primal", s.qp_settings.eps_primal);
    s.qp_settings.eps_dual = qp.number_or("eps_dual", s.qp_settings.eps_dual);
    if (qp.has("max_iter")) s.qp_settings.max_iter = static_cast<int>(qp.at("max_iter").integer());
    s.qp_settings.regularization = qp.number_or("regularization", s.qp_settings.regularization);
    try {
      s.qp_settings.validate();
    } catch (const ConfigError& e) {
      qp.fail(e.what());
    }
  }
  if (root.has("otg")) {
    const Node otg = root.at("otg");
    if (otg.has("enabled")) s.otg.enabled = otg.at("enabled").boolean();
    s.otg.v_max = otg.number_or("v_max", s.otg.v_max);
    s.otg.a_max = otg.number_or("a_max", s.otg.a_max);
    if (!(s.otg.v_max > 0.0) || !(s.otg.a_max > 0.0)) otg.fail("v_max and a_max must be positive");
  }
  s.switch_threshold = root.number_or("switch_threshold", s.switch_threshold);
  if (root.has("settle_cycles")) s.settle_cycles = static_cast<int>(root.at("settle_cycles").integer());
  s.pixel_noise = root.number_or("pixel_noise", s.pixel_noise);
  if (root.has("log_timing")) s.log_timing = root.at("log_timing").boolean();

  try {
    s.validate();
  } catch (const ConfigError& e) {
    // Scenario-level checks mostly concern the start pose.
    q0.fail(e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open scenario file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path.string());
}

std::string csv_header(std::size_t dof) {
  std::string h = "t";
  for (std::size_t i = 0; i < dof; ++i) h += ",q" + std::to_string(i);
  for (std::size_t i = 0; i < dof; ++i) h += ",qd" + std::to_string(i);
  h += ",e_rcm_mm,e_vis_u,e_vis_v,e_vis_px,target_id,solve_us,slack1,slack2,status1,status2";
  return h;
}

void write_csv(std::ostream& out, const std::vector<StepRecord>& records, std::size_t dof) {
  std::string line = csv_header(dof);
  line.push_back('\n');
  out << line;
  for (const StepRecord& r : records) {
    line.clear();
    append_number(line, r.t);
    for (Eigen::Index i = 0; i < r.q.size(); ++i) {
      line.push_back(',');
      append_number(line, r.q[i]);
    }
    for (Eigen::Index i = 0; i < r.qdot_sol.size(); ++i) {
      line.push_back(',');
      append_number(line, r.qdot_sol[i]);
    }
    for (double v : {r.e_rcm_mm, r.e_vis_u, r.e_vis_v, r.e_vis_norm}) {
      line.push_back(',');
      append_number(line, v);
    }
    line += "," + std::to_string(r.target_id);
    for (double v : {r.solve_us, r.slack1, r.slack2}) {
      line.push_back(',');
      append_number(line, v);
    }
    line.push_back(',');
    line += to_string(r.status1);
    line.push_back(',');
    line += to_string(r.status2);
    line.push_back('\n');
    out << line;
  }
}

std::string summary_json(const SimSummary& summary, const std::optional<std::string>& failure) {
  json j;
  j["max_e_rcm_mm"] = summary.max_e_rcm_mm;
  j["mean_e_rcm_mm"] = summary.mean_e_rcm_mm;
  j["mean_solve_us"] = summary.mean_solve_us;
  j["max_solve_us"] = summary.max_solve_us;
  json targets = json::array();
  for (const TargetSummary& t : summary.targets) {
    json entry;
    entry["id"] = t.id;
    entry["t_converged_s"] = t.t_converged ? json(*t.t_converged) : json(nullptr);
    targets.push_back(entry);
  }
  j["targets"] = targets;
  j["completed"] = summary.completed;
  if (failure) j["failure"] = *failure;
  return j.dump(2) + "\n";
}

}  // namespace rcmhqp
