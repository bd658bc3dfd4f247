#pragma once

#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlsm {

// Class-agnostic affordances. Ordering matches the affordance-map channels.
enum class Affordance : int {
  Pickable = 0,
  Receptacle = 1,
  Togglable = 2,
  Openable = 3,
  Ground = 4,
  Obstacle = 5,
};
inline constexpr int kNumAffordances = 6;

inline const char* affordance_name(Affordance a) {
  switch (a) {
    case Affordance::Pickable: return "pickable";
    case Affordance::Receptacle: return "receptacle";
    case Affordance::Togglable: return "togglable";
    case Affordance::Openable: return "openable";
    case Affordance::Ground: return "ground";
    case Affordance::Obstacle: return "obstacle";
  }
  return "?";
}

struct ClassInfo {
  std::string name;
  uint8_t affordances = 0;  // bit i = Affordance(i)
  bool sliceable = false;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Semantic class registry: names, affordances, instruction synonyms and
// retry alternates. Loaded from the classes config shipped under data/.
class ClassTable {
 public:
  int size() const { return static_cast<int>(classes_.size()); }
  const ClassInfo& info(int c) const { return classes_.at(c); }
  const std::string& name(int c) const { return classes_.at(c).name; }

  bool has_affordance(int c, Affordance a) const {
    return (classes_.at(c).affordances >> static_cast<int>(a)) & 1;
  }
  bool sliceable(int c) const { return classes_.at(c).sliceable; }

  std::optional<int> index_of(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }

  // Resolves a lowercase surface phrase ("mug", "coffee machine", "disc").
  std::optional<int> resolve_phrase(const std::string& phrase) const {
    auto it = synonyms_.find(phrase);
    if (it == synonyms_.end()) return std::nullopt;
    return it->second;
  }

  // The class tried instead after the retry budget is spent.
  std::optional<int> alternate_for(int c) const {
    auto it = alternates_.find(c);
    if (it == alternates_.end()) return std::nullopt;
    return it->second;
  }

  // Canonical surface form used when rendering instructions: the class name
  // lowercased with spaces at CamelCase boundaries ("CoffeeMachine" ->
  // "coffee machine").
  std::string canonical_phrase(int c) const { return spaced_lower(classes_.at(c).name); }

  int add_class(const std::string& name, uint8_t affordances, bool sliceable) {
    if (by_name_.count(name)) throw ConfigError("duplicate class: " + name);
    int idx = size();
    classes_.push_back({name, affordances, sliceable});
    by_name_[name] = idx;
    synonyms_[spaced_lower(name)] = idx;
    return idx;
  }

  void add_synonym(const std::string& phrase, int cls) { synonyms_[phrase] = cls; }
  void add_alternate(int cls, int alt) { alternates_[cls] = alt; }

  // Config format, one directive per line ('#' comments):
  //   HLSMCLASSES v1
  //   class <Name> [pickable|receptacle|togglable|openable|ground|obstacle|sliceable]...
  //   synonym <phrase words...> <ClassName>
  //   alternate <ClassName> <ClassName>
  // Class 0 must be the empty/background class with no affordances.
  static ClassTable parse(std::istream& in) {
    ClassTable t;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    std::vector<std::pair<std::vector<std::string>, int>> deferred;  // synonym/alternate lines
    while (std::getline(in, line)) {
      ++lineno;
      auto tokens = split_tokens(line);
      if (tokens.empty()) continue;
      if (!header_seen) {
        if (tokens.size() != 2 || tokens[0] != "HLSMCLASSES" || tokens[1] != "v1")
          throw ConfigError("line 1: expected header 'HLSMCLASSES v1'");
        header_seen = true;
        continue;
      }
      if (tokens[0] == "class") {
        if (tokens.size() < 2) throw ConfigError(err(lineno, "class needs a name"));
        uint8_t aff = 0;
        bool sliceable = false;
        for (size_t i = 2; i < tokens.size(); ++i) {
          if (tokens[i] == "sliceable") {
            sliceable = true;
            continue;
          }
          bool matched = false;
          for (int a = 0; a < kNumAffordances; ++a) {
            if (tokens[i] == affordance_name(static_cast<Affordance>(a))) {
              aff |= uint8_t{1} << a;
              matched = true;
              break;
            }
          }
          if (!matched) throw ConfigError(err(lineno, "unknown affordance '" + tokens[i] + "'"));
        }
        t.add_class(tokens[1], aff, sliceable);
      } else if (tokens[0] == "synonym" || tokens[0] == "alternate") {
        deferred.push_back({tokens, lineno});
      } else {
        throw ConfigError(err(lineno, "unknown directive '" + tokens[0] + "'"));
      }
    }
    if (!header_seen) throw ConfigError("empty classes config");
    for (const auto& [tokens, ln] : deferred) {
      if (tokens[0] == "synonym") {
        if (tokens.size() < 3) throw ConfigError(err(ln, "synonym <phrase...> <Class>"));
        auto cls = t.index_of(tokens.back());
        if (!cls) throw ConfigError(err(ln, "unknown class '" + tokens.back() + "'"));
        std::string phrase;
        for (size_t i = 1; i + 1 < tokens.size(); ++i) {
          if (!phrase.empty()) phrase += ' ';
          phrase += lower(tokens[i]);
        }
        t.add_synonym(phrase, *cls);
      } else {
        if (tokens.size() != 3) throw ConfigError(err(ln, "alternate <Class> <Class>"));
        auto a = t.index_of(tokens[1]);
        auto b = t.index_of(tokens[2]);
        if (!a || !b) throw ConfigError(err(ln, "unknown class in alternate"));
        t.add_alternate(*a, *b);
      }
    }
    if (t.size() == 0) throw ConfigError("classes config defines no classes");
    if (t.classes_[0].affordances != 0)
      throw ConfigError("class 0 is reserved for the background/empty class");
    return t;
  }

  static ClassTable load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open classes config: " + path);
    return parse(f);
  }

  static std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }

 private:
  static std::string err(int lineno, const std::string& msg) {
    return "line " + std::to_string(lineno) + ": " + msg;
  }

  static std::vector<std::string> split_tokens(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
      if (c == '#') break;
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  }

  // CamelCase -> spaced lowercase; uppercase runs stay together ("CD" ->
  // "cd", "CoffeeMachine" -> "coffee machine").
  static std::string spaced_lower(const std::string& name) {
    std::string out;
    for (size_t i = 0; i < name.size(); ++i) {
      const auto upper = [&](size_t k) {
        return k < name.size() && std::isupper(static_cast<unsigned char>(name[k]));
      };
      if (i > 0 && upper(i) && (!upper(i - 1) || (upper(i - 1) && !upper(i + 1) && i + 1 < name.size())))
        out += ' ';
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(name[i])));
    }
    return out;
  }

  std::vector<ClassInfo> classes_;
  std::map<std::string, int> by_name_;
  std::map<std::string, int> synonyms_;
  std::map<int, int> alternates_;
};

}  // namespace hlsm
