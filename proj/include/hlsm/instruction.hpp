#pragma once

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlsm/classes.hpp"
#include "hlsm/types.hpp"

namespace hlsm {

enum class TaskType {
  Examine,
  PickAndPlace,
  StackAndPlace,
  CleanAndPlace,
  CoolAndPlace,
  HeatAndPlace,
  PickTwoAndPlace,
};

inline const char* task_type_name(TaskType t) {
  switch (t) {
    case TaskType::Examine: return "Examine";
    case TaskType::PickAndPlace: return "PickAndPlace";
    case TaskType::StackAndPlace: return "StackAndPlace";
    case TaskType::CleanAndPlace: return "CleanAndPlace";
    case TaskType::CoolAndPlace: return "CoolAndPlace";
    case TaskType::HeatAndPlace: return "HeatAndPlace";
    case TaskType::PickTwoAndPlace: return "PickTwoAndPlace";
  }
  return "?";
}

inline std::optional<TaskType> task_type_from_name(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(TaskType::PickTwoAndPlace); ++i)
    if (s == task_type_name(static_cast<TaskType>(i))) return static_cast<TaskType>(i);
  return std::nullopt;
}

struct TaskSpec {
  TaskType type = TaskType::PickAndPlace;
  int object_class = kNoClass;
  int receptacle_class = kNoClass;    // kNoClass for Examine
  int intermediate_class = kNoClass;  // StackAndPlace only
  bool sliced = false;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

// Structural failure: no grammar rule matched. position is the index of the
// furthest token the parser got to.
class UnparseableInstruction : public std::runtime_error {
 public:
  UnparseableInstruction(size_t position, const std::string& text)
      : std::runtime_error("cannot parse instruction near token " + std::to_string(position) +
                           ": \"" + text + "\""),
        position(position) {}
  size_t position;
};

// A noun slot held a word no synonym resolves.
class UnknownClass : public std::runtime_error {
 public:
  explicit UnknownClass(std::string tok)
      : std::runtime_error("unknown object class: \"" + tok + "\""), token(std::move(tok)) {}
  std::string token;
};

namespace detail {

inline std::vector<std::string> instruction_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

class InstructionCursor {
 public:
  InstructionCursor(std::vector<std::string> tokens, std::string text)
      : tokens_(std::move(tokens)), text_(std::move(text)) {}

  bool done() const { return pos_ >= tokens_.size(); }
  const std::string& peek() const {
    static const std::string kEmpty;
    return done() ? kEmpty : tokens_[pos_];
  }
  bool accept(const std::string& word) {
    if (!done() && tokens_[pos_] == word) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(const std::string& word) {
    if (!accept(word)) fail();
  }
  bool accept_any(std::initializer_list<const char*> words) {
    for (const char* w : words)
      if (accept(w)) return true;
    return false;
  }
  [[noreturn]] void fail() const { throw UnparseableInstruction(pos_, text_); }

  // Longest multiword synonym match; falls back to stripping a plural 's'.
  // A non-resolving noun token raises UnknownClass.
  int noun(const ClassTable& classes, int max_words = 3) {
    if (done()) fail();
    for (int n = std::min<int>(max_words, static_cast<int>(tokens_.size() - pos_)); n >= 1; --n) {
      std::string phrase;
      for (int i = 0; i < n; ++i) {
        if (i) phrase += ' ';
        phrase += tokens_[pos_ + i];
      }
      if (auto c = classes.resolve_phrase(phrase)) {
        pos_ += n;
        return *c;
      }
      if (phrase.size() > 1 && phrase.back() == 's') {
        phrase.pop_back();
        if (auto c = classes.resolve_phrase(phrase)) {
          pos_ += n;
          return *c;
        }
      }
    }
    throw UnknownClass(tokens_[pos_]);
  }

 private:
  std::vector<std::string> tokens_;
  std::string text_;
  size_t pos_ = 0;
};

}  // namespace detail

// Constrained instruction grammar:
//   put a [clean|hot|cold] [sliced] <obj> in|on the <recep>
//   put two [sliced] <obj>s in|on the <recep>
//   put a [sliced] <obj> with a <obj2> in it in|on the <recep>
//   examine a [sliced] <obj> under the lamp
// Case-insensitive; class names resolve through the synonym table.
inline TaskSpec parse_instruction(const std::string& text, const ClassTable& classes) {
  detail::InstructionCursor cur(detail::instruction_tokens(text), text);
  TaskSpec spec;

  auto modifiers = [&](TaskType& type) {
    for (;;) {
      if (cur.accept("sliced")) {
        spec.sliced = true;
      } else if (cur.accept("clean")) {
        type = TaskType::CleanAndPlace;
      } else if (cur.accept("hot")) {
        type = TaskType::HeatAndPlace;
      } else if (cur.accept("cold")) {
        type = TaskType::CoolAndPlace;
      } else {
        break;
      }
    }
  };
  auto preposition = [&] {
    if (!cur.accept_any({"in", "on", "into", "onto"})) cur.fail();
  };

  if (cur.accept("examine")) {
    cur.accept_any({"a", "an", "the"});
    TaskType ignored = TaskType::Examine;
    modifiers(ignored);
    spec.type = TaskType::Examine;
    spec.object_class = cur.noun(classes);
    cur.expect("under");
    cur.expect("the");
    cur.expect("lamp");
    if (!cur.done()) cur.fail();
    return spec;
  }

  cur.expect("put");
  if (cur.accept("two")) {
    spec.type = TaskType::PickTwoAndPlace;
    TaskType ignored = spec.type;
    modifiers(ignored);
    spec.object_class = cur.noun(classes);
    preposition();
    cur.expect("the");
    spec.receptacle_class = cur.noun(classes);
    if (!cur.done()) cur.fail();
    return spec;
  }

  if (!cur.accept_any({"a", "an", "the"})) cur.fail();
  TaskType type = TaskType::PickAndPlace;
  modifiers(type);
  spec.type = type;
  spec.object_class = cur.noun(classes);
  if (cur.accept("with")) {
    if (spec.type != TaskType::PickAndPlace) cur.fail();  // no state modifier on stacks
    spec.type = TaskType::StackAndPlace;
    cur.accept_any({"a", "an"});
    spec.intermediate_class = cur.noun(classes);
    cur.expect("in");
    cur.expect("it");
  }
  preposition();
  cur.expect("the");
  spec.receptacle_class = cur.noun(classes);
  if (!cur.done()) cur.fail();
  return spec;
}

// Canonical phrasing; parse_instruction(render_instruction(t)) == t.
inline std::string render_instruction(const TaskSpec& spec, const ClassTable& classes) {
  const std::string obj = classes.canonical_phrase(spec.object_class);
  const std::string sliced = spec.sliced ? "sliced " : "";
  std::ostringstream out;
  switch (spec.type) {
    case TaskType::Examine:
      out << "examine a " << sliced << obj << " under the lamp";
      return out.str();
    case TaskType::PickTwoAndPlace:
      out << "put two " << sliced << obj << "s in the "
          << classes.canonical_phrase(spec.receptacle_class);
      return out.str();
    case TaskType::StackAndPlace:
      out << "put a " << sliced << obj << " with a "
          << classes.canonical_phrase(spec.intermediate_class) << " in it in the "
          << classes.canonical_phrase(spec.receptacle_class);
      return out.str();
    case TaskType::CleanAndPlace:
    case TaskType::HeatAndPlace:
    case TaskType::CoolAndPlace: {
      const char* adj = spec.type == TaskType::CleanAndPlace  ? "clean"
                        : spec.type == TaskType::HeatAndPlace ? "hot"
                                                              : "cold";
      out << "put a " << adj << " " << sliced << obj << " in the "
          << classes.canonical_phrase(spec.receptacle_class);
      return out.str();
    }
    case TaskType::PickAndPlace:
      out << "put a " << sliced << obj << " in the "
          << classes.canonical_phrase(spec.receptacle_class);
      return out.str();
  }
  return {};
}

}  // namespace hlsm
