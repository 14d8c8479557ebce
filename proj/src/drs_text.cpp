#include "nl2cnl/drs_text.hpp"

#include <sstream>

namespace nl2cnl {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Drs parse_top() {
    Drs d = parse_box();
    skip_ws();
    if (pos_ != text_.size()) fail("end of input");
    return d;
  }

 private:
  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;

  [[noreturn]] void fail(const std::string& expected) {
    throw SyntaxError(line_, col_, expected);
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r'))
      advance();
  }

  char peek() { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("'") + c + "'");
    advance();
  }

  // Lemma-shaped token; the underscore is rejected for referents by the
  // callers that need the narrower charset.
  std::string word() {
    skip_ws();
    size_t start = pos_;
    if (peek() < 'a' || peek() > 'z') fail("name");
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')
        advance();
      else
        break;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  Referent referent() {
    skip_ws();
    int l = line_, c = col_;
    std::string w = word();
    if (!valid_referent_name(w)) throw SyntaxError(l, c, "referent name");
    return Referent{std::move(w)};
  }

  int natural() {
    skip_ws();
    if (peek() < '0' || peek() > '9') fail("number");
    long v = 0;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
      v = v * 10 + (text_[pos_] - '0');
      if (v > 1000000000L) fail("smaller number");
      advance();
    }
    return static_cast<int>(v);
  }

  void keyword(const std::string& kw) {
    skip_ws();
    if (text_.substr(pos_, kw.size()) != kw) fail("'" + kw + "'");
    for (size_t i = 0; i < kw.size(); ++i) advance();
  }

  Drs parse_box() {
    keyword("drs");
    expect('(');
    std::vector<Referent> refs;
    expect('[');
    skip_ws();
    if (peek() != ']') {
      refs.push_back(referent());
      while (skip_ws(), peek() == ',') {
        advance();
        refs.push_back(referent());
      }
    }
    expect(']');
    expect(',');
    std::vector<Condition> conds;
    expect('[');
    skip_ws();
    if (peek() != ']') {
      conds.push_back(condition());
      while (skip_ws(), peek() == ',') {
        advance();
        conds.push_back(condition());
      }
    }
    expect(']');
    expect(')');
    return make_drs(std::move(refs), std::move(conds));
  }

  Condition condition() {
    skip_ws();
    std::string head = word();
    if (head == "pred") {
      expect('(');
      Referent r = referent();
      expect(',');
      std::string lemma = word();
      expect(',');
      std::string pos_tok = word();
      auto pos = pos_tok.size() == 1 ? word_pos_from_char(pos_tok[0])
                                     : std::nullopt;
      if (!pos) throw UnknownPos(pos_tok);
      expect(',');
      int sense = natural();
      expect(')');
      return Pred{std::move(r), std::move(lemma), *pos, sense};
    }
    if (head == "named") {
      expect('(');
      Referent r = referent();
      expect(',');
      std::string name = word();
      expect(',');
      std::string cls_tok = word();
      auto cls = entity_class_from_string(cls_tok);
      if (!cls) throw UnknownEntityClass(cls_tok);
      expect(')');
      return Named{std::move(r), std::move(name), *cls};
    }
    if (head == "rel") {
      expect('(');
      Referent a = referent();
      expect(',');
      Referent b = referent();
      expect(',');
      std::string label = word();
      expect(')');
      return Rel{std::move(a), std::move(b), std::move(label)};
    }
    if (head == "eq") {
      expect('(');
      Referent a = referent();
      expect(',');
      Referent b = referent();
      expect(')');
      return Eq{std::move(a), std::move(b)};
    }
    if (head == "not" || head == "pos") {
      expect('(');
      Drs inner = parse_box();
      expect(')');
      if (head == "not") return Not{Box<Drs>(std::move(inner))};
      return Pos{Box<Drs>(std::move(inner))};
    }
    if (head == "imp" || head == "or") {
      expect('(');
      Drs first = parse_box();
      expect(',');
      Drs second = parse_box();
      expect(')');
      if (head == "imp")
        return Imp{Box<Drs>(std::move(first)), Box<Drs>(std::move(second))};
      return Or{Box<Drs>(std::move(first)), Box<Drs>(std::move(second))};
    }
    if (head == "whq") {
      expect('(');
      Referent r = referent();
      expect(',');
      Drs body = parse_box();
      expect(')');
      return Whq{std::move(r), Box<Drs>(std::move(body))};
    }
    fail("condition head");
  }
};

void write_drs(std::ostream& os, const Drs& d);

void write_cond(std::ostream& os, const Condition& c) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Pred>) {
          os << "pred(" << node.ref.name << ',' << node.lemma << ','
             << to_char(node.pos) << ',' << node.sense << ')';
        } else if constexpr (std::is_same_v<T, Named>) {
          os << "named(" << node.ref.name << ',' << node.name << ','
             << to_string(node.cls) << ')';
        } else if constexpr (std::is_same_v<T, Rel>) {
          os << "rel(" << node.first.name << ',' << node.second.name << ','
             << node.label << ')';
        } else if constexpr (std::is_same_v<T, Eq>) {
          os << "eq(" << node.first.name << ',' << node.second.name << ')';
        } else if constexpr (std::is_same_v<T, Not>) {
          os << "not(";
          write_drs(os, *node.inner);
          os << ')';
        } else if constexpr (std::is_same_v<T, Pos>) {
          os << "pos(";
          write_drs(os, *node.inner);
          os << ')';
        } else if constexpr (std::is_same_v<T, Imp>) {
          os << "imp(";
          write_drs(os, *node.antecedent);
          os << ',';
          write_drs(os, *node.consequent);
          os << ')';
        } else if constexpr (std::is_same_v<T, Or>) {
          os << "or(";
          write_drs(os, *node.left);
          os << ',';
          write_drs(os, *node.right);
          os << ')';
        } else {
          static_assert(std::is_same_v<T, Whq>);
          os << "whq(" << node.ref.name << ',';
          write_drs(os, *node.body);
          os << ')';
        }
      },
      c);
}

void write_drs(std::ostream& os, const Drs& d) {
  os << "drs([";
  for (size_t i = 0; i < d.referents.size(); ++i) {
    if (i) os << ',';
    os << d.referents[i].name;
  }
  os << "],[";
  for (size_t i = 0; i < d.conditions.size(); ++i) {
    if (i) os << ',';
    write_cond(os, d.conditions[i]);
  }
  os << "])";
}

void pretty_box(std::ostream& os, const Drs& d, int indent);

void pretty_cond(std::ostream& os, const Condition& c, int indent) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        auto open = [&](const char* head) -> std::string {
          return std::string(head) + "(\n" +
                 std::string(static_cast<size_t>(indent) + 2, ' ');
        };
        if constexpr (std::is_same_v<T, Not> || std::is_same_v<T, Pos>) {
          os << open(std::is_same_v<T, Not> ? "not" : "pos");
          pretty_box(os, *node.inner, indent + 2);
          os << ')';
        } else if constexpr (std::is_same_v<T, Imp>) {
          os << open("imp");
          pretty_box(os, *node.antecedent, indent + 2);
          os << ",\n" << std::string(static_cast<size_t>(indent) + 2, ' ');
          pretty_box(os, *node.consequent, indent + 2);
          os << ')';
        } else if constexpr (std::is_same_v<T, Or>) {
          os << open("or");
          pretty_box(os, *node.left, indent + 2);
          os << ",\n" << std::string(static_cast<size_t>(indent) + 2, ' ');
          pretty_box(os, *node.right, indent + 2);
          os << ')';
        } else if constexpr (std::is_same_v<T, Whq>) {
          os << "whq(" << node.ref.name << ",\n"
             << std::string(static_cast<size_t>(indent) + 2, ' ');
          pretty_box(os, *node.body, indent + 2);
          os << ')';
        } else {
          write_cond(os, Condition(node));
        }
      },
      c);
}

void pretty_box(std::ostream& os, const Drs& d, int indent) {
  os << "drs([";
  for (size_t i = 0; i < d.referents.size(); ++i) {
    if (i) os << ',';
    os << d.referents[i].name;
  }
  os << "],\n" << std::string(static_cast<size_t>(indent) + 4, ' ') << '[';
  for (size_t i = 0; i < d.conditions.size(); ++i) {
    if (i) os << ",\n" << std::string(static_cast<size_t>(indent) + 5, ' ');
    pretty_cond(os, d.conditions[i], indent + 5);
  }
  os << "])";
}

}  // namespace

Drs parse_drs(std::string_view text) { return Parser(text).parse_top(); }

std::string serialize_drs(const Drs& drs) {
  std::ostringstream os;
  write_drs(os, drs);
  return os.str();
}

std::string pretty_drs(const Drs& drs) {
  std::ostringstream os;
  pretty_box(os, drs, 0);
  return os.str();
}

DrsDocument parse_document(std::string_view text) {
  DrsDocument doc;
  std::set<std::string> ids;
  size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= text.size()) return std::nullopt;
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + (end < text.size() ? 1 : 0);
    return line;
  };
  std::optional<std::string_view> line;
  int line_no = 0;
  while ((line = next_line())) {
    ++line_no;
    std::string_view l = *line;
    while (!l.empty() && (l.back() == '\r' || l.back() == ' ')) l.remove_suffix(1);
    if (l.empty()) continue;
    if (l.substr(0, 2) != "# ")
      throw SyntaxError(line_no, 1, "'# id' record header");
    std::string id(l.substr(2));
    if (id.empty() || id.find(' ') != std::string::npos)
      throw SyntaxError(line_no, 3, "record id");
    if (!ids.insert(id).second) throw DuplicateId(id);
    // The body runs until the next blank line (or end of input).
    std::string body;
    while ((line = next_line())) {
      ++line_no;
      std::string_view b = *line;
      while (!b.empty() && b.back() == '\r') b.remove_suffix(1);
      if (b.empty()) break;
      body.append(b);
      body.push_back('\n');
    }
    if (body.empty()) throw SyntaxError(line_no, 1, "drs");
    doc.records.emplace_back(std::move(id), parse_drs(body));
  }
  return doc;
}

std::string serialize_document(const DrsDocument& doc) {
  std::string out;
  for (size_t i = 0; i < doc.records.size(); ++i) {
    if (i) out += "\n";
    out += "# " + doc.records[i].first + "\n";
    out += serialize_drs(doc.records[i].second) + "\n";
  }
  return out;
}

}  // namespace nl2cnl
