#include "redor/dataset.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace redor {

using json = nlohmann::json;

std::size_t OfflineDataset::transition_count() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.length();
  return n;
}

void OfflineDataset::validate() const {
  env.validate();
  require(gamma > 0.0 && gamma <= 1.0, "dataset: gamma must be in (0, 1]");
  require(!trajectories.empty(), "dataset: trajectory count must be >= 1");
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& traj = trajectories[i];
    if (traj.transitions.empty())
      throw ValidationError("trajectory " + std::to_string(i) + " is empty");
    for (std::size_t t = 0; t < traj.transitions.size(); ++t) {
      const Transition& tr = traj.transitions[t];
      if (tr.state.size() != env.obs_dim || tr.next_state.size() != env.obs_dim)
        throw ValidationError("trajectory " + std::to_string(i) + " step " +
                              std::to_string(t) + ": state dimension " +
                              std::to_string(tr.state.size()) +
                              " does not match obs_dim " +
                              std::to_string(env.obs_dim));
      if (tr.action.size() != env.act_dim)
        throw ValidationError("trajectory " + std::to_string(i) + " step " +
                              std::to_string(t) + ": action dimension mismatch");
      if (t + 1 < traj.transitions.size() &&
          tr.next_state != traj.transitions[t + 1].state)
        throw ValidationError("trajectory " + std::to_string(i) + " step " +
                              std::to_string(t) + ": broken state chain");
    }
  }
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
  require(gamma > 0.0 && gamma <= 1.0, "discounted_return: gamma must be in (0, 1]");
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) acc = rewards[i] + gamma * acc;
  return acc;
}

Vector returns_to_go(const std::vector<double>& rewards, double gamma) {
  require(gamma > 0.0 && gamma <= 1.0, "returns_to_go: gamma must be in (0, 1]");
  Vector out(static_cast<Eigen::Index>(rewards.size()));
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    out[static_cast<Eigen::Index>(i)] = acc;
  }
  return out;
}

Trajectory make_trajectory(std::vector<Transition> transitions, double gamma) {
  require(!transitions.empty(), "trajectory: needs at least one transition");
  std::vector<double> rewards;
  rewards.reserve(transitions.size());
  for (const auto& t : transitions) rewards.push_back(t.reward);
  Trajectory traj;
  traj.transitions = std::move(transitions);
  traj.returns_to_go = returns_to_go(rewards, gamma);
  traj.total_return = traj.returns_to_go[0];
  return traj;
}

OfflineDataset generate_dataset(const ToyEnv& env,
                                const std::vector<PolicyMixEntry>& mix,
                                double gamma, std::uint64_t seed) {
  int total = 0;
  for (const auto& entry : mix) {
    require(entry.count >= 0, "generate_dataset: counts must be >= 0");
    total += entry.count;
  }
  require(total >= 1, "generate_dataset: at least one trajectory required");

  OfflineDataset dataset;
  dataset.env = env.spec();
  dataset.gamma = gamma;
  dataset.seed = seed;
  Rng rng(seed);

  std::string provenance;
  for (const auto& entry : mix) {
    if (!provenance.empty()) provenance += ",";
    provenance += policy_kind_name(entry.policy) + ":" +
                  std::to_string(entry.count) + "@" +
                  format_double(entry.noise_scale);
    for (int n = 0; n < entry.count; ++n) {
      std::vector<Transition> transitions;
      transitions.reserve(env.spec().horizon);
      Vector state = env.reset(rng);
      for (int t = 0; t < env.spec().horizon; ++t) {
        const Vector action =
            behavior_action(env, entry.policy, state, entry.noise_scale, rng);
        auto [next_state, reward] = env.step(state, action);
        transitions.push_back(Transition{state, action, reward, next_state,
                                         t + 1 == env.spec().horizon});
        state = next_state;
      }
      dataset.trajectories.push_back(make_trajectory(std::move(transitions), gamma));
    }
  }
  dataset.provenance = provenance;
  dataset.validate();
  return dataset;
}

namespace {

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector json_to_vector(const json& arr) {
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

json parse_line(const std::string& line, long line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ParseError("malformed record", line_no);
  return j;
}

}  // namespace

void write_dataset(const OfflineDataset& dataset,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");

  json header;
  header["format_version"] = 1;
  header["env"] = dataset.env.name;
  header["obs_dim"] = dataset.env.obs_dim;
  header["act_dim"] = dataset.env.act_dim;
  header["horizon"] = dataset.env.horizon;
  header["action_low"] = vector_to_json(dataset.env.action_low);
  header["action_high"] = vector_to_json(dataset.env.action_high);
  header["gamma"] = dataset.gamma;
  header["r_max"] = dataset.env.r_max;
  header["trajectory_count"] = dataset.trajectories.size();
  header["seed"] = dataset.seed;
  header["provenance"] = dataset.provenance;
  out << header.dump() << "\n";

  for (const Trajectory& traj : dataset.trajectories) {
    json rec;
    json states = json::array();
    states.push_back(vector_to_json(traj.transitions.front().state));
    for (const Transition& t : traj.transitions)
      states.push_back(vector_to_json(t.next_state));
    json actions = json::array();
    json rewards = json::array();
    for (const Transition& t : traj.transitions) {
      actions.push_back(vector_to_json(t.action));
      rewards.push_back(t.reward);
    }
    rec["states"] = std::move(states);
    rec["actions"] = std::move(actions);
    rec["rewards"] = std::move(rewards);
    rec["terminal"] = traj.transitions.back().terminal;
    out << rec.dump() << "\n";
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

OfflineDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");

  std::string line;
  long line_no = 1;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  json header = parse_line(line, 1);

  OfflineDataset dataset;
  try {
    dataset.env.name = header.at("env").get<std::string>();
    dataset.env.obs_dim = header.at("obs_dim").get<int>();
    dataset.env.act_dim = header.at("act_dim").get<int>();
    dataset.env.horizon = header.at("horizon").get<int>();
    dataset.env.action_low = json_to_vector(header.at("action_low"));
    dataset.env.action_high = json_to_vector(header.at("action_high"));
    dataset.env.r_max = header.at("r_max").get<double>();
    dataset.gamma = header.at("gamma").get<double>();
    dataset.seed = header.at("seed").get<std::uint64_t>();
    dataset.provenance = header.value("provenance", std::string{});
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad header: ") + e.what(), 1);
  }
  const auto expected = header.at("trajectory_count").get<std::size_t>();

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec = parse_line(line, line_no);
    const std::size_t traj_index = dataset.trajectories.size();
    std::vector<Vector> states;
    std::vector<Vector> actions;
    std::vector<double> rewards;
    bool terminal = false;
    try {
      for (const auto& s : rec.at("states")) states.push_back(json_to_vector(s));
      for (const auto& a : rec.at("actions")) actions.push_back(json_to_vector(a));
      for (const auto& r : rec.at("rewards")) rewards.push_back(r.get<double>());
      terminal = rec.at("terminal").get<bool>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad trajectory record: ") + e.what(), line_no);
    }
    if (actions.empty() || states.size() != actions.size() + 1 ||
        rewards.size() != actions.size())
      throw ValidationError("trajectory " + std::to_string(traj_index) +
                            ": inconsistent record lengths");
    std::vector<Transition> transitions;
    transitions.reserve(actions.size());
    for (std::size_t t = 0; t < actions.size(); ++t) {
      const bool last = t + 1 == actions.size();
      transitions.push_back(Transition{states[t], actions[t], rewards[t],
                                       states[t + 1], last && terminal});
    }
    dataset.trajectories.push_back(
        make_trajectory(std::move(transitions), dataset.gamma));
  }

  if (dataset.trajectories.size() != expected)
    throw ParseError("expected " + std::to_string(expected) +
                         " trajectories, found " +
                         std::to_string(dataset.trajectories.size()),
                     line_no);
  dataset.validate();
  return dataset;
}

bool datasets_equal(const OfflineDataset& a, const OfflineDataset& b) {
  if (a.env.name != b.env.name || a.env.obs_dim != b.env.obs_dim ||
      a.env.act_dim != b.env.act_dim || a.env.horizon != b.env.horizon ||
      a.env.action_low != b.env.action_low ||
      a.env.action_high != b.env.action_high || a.env.r_max != b.env.r_max ||
      a.gamma != b.gamma || a.seed != b.seed || a.provenance != b.provenance ||
      a.trajectories.size() != b.trajectories.size())
    return false;
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
    const auto& ta = a.trajectories[i];
    const auto& tb = b.trajectories[i];
    if (ta.transitions.size() != tb.transitions.size()) return false;
    for (std::size_t t = 0; t < ta.transitions.size(); ++t) {
      const auto& x = ta.transitions[t];
      const auto& y = tb.transitions[t];
      if (x.state != y.state || x.action != y.action || x.reward != y.reward ||
          x.next_state != y.next_state || x.terminal != y.terminal)
        return false;
    }
  }
  return true;
}

}  // namespace redor
