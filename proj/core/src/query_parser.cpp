#include <algorithm>
#include <cctype>
#include <sstream>

#include "emql/errors.hpp"
#include "emql/query.hpp"

namespace emql {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

QueryPtr wrap(Query::Node node) { return std::make_shared<const Query>(Query{std::move(node)}); }

void require_child(const QueryPtr& q, const char* where) {
  if (!q) throw TypeError(std::string(where) + ": missing operand");
  validate(*q);
}

bool needs_quotes(std::string_view name) {
  if (name.empty()) return true;
  return std::any_of(name.begin(), name.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '"' ||
           c == '\\';
  });
}

void print_name(std::ostream& out, std::string_view prefix, std::string_view name) {
  out << prefix;
  if (!needs_quotes(name)) {
    out << name;
    return;
  }
  out << '"';
  for (char c : name) {
    if (c == '"' || c == '\\') out << '\\';
    out << c;
  }
  out << '"';
}

void print(std::ostream& out, const Query& q, const Vocab& vocab) {
  auto relations = [&](const RelationSet& rs) {
    out << "(rel";
    for (RelationId r : rs.relations) {
      out << ' ';
      print_name(out, "r:", vocab.relation_name(r));
    }
    out << ')';
  };
  auto nary = [&](const char* op, const std::vector<QueryPtr>& xs) {
    out << '(' << op;
    for (const auto& x : xs) {
      out << ' ';
      print(out, *x, vocab);
    }
    out << ')';
  };
  std::visit(overloaded{
                 [&](const BasicSet& b) {
                   out << "(basic";
                   for (EntityId e : b.entities) {
                     out << ' ';
                     print_name(out, "e:", vocab.entity_name(e));
                   }
                   out << ')';
                 },
                 [&](const FollowNode& f) {
                   out << "(follow ";
                   print(out, *f.input, vocab);
                   out << ' ';
                   relations(f.relations);
                   out << ')';
                 },
                 [&](const FilterNode& f) {
                   out << "(filter ";
                   print(out, *f.input, vocab);
                   out << ' ';
                   relations(f.relations);
                   out << ' ';
                   print(out, *f.objects, vocab);
                   out << ')';
                 },
                 [&](const IntersectNode& n) { nary("intersect", n.operands); },
                 [&](const UnionNode& n) { nary("union", n.operands); },
                 [&](const DifferenceNode& d) {
                   out << "(difference ";
                   print(out, *d.left, vocab);
                   out << ' ';
                   print(out, *d.right, vocab);
                   out << ')';
                 },
             },
             q.node);
}

// Recursive-descent parser over a flat character buffer.
class Parser {
 public:
  Parser(std::string_view text, const Vocab& vocab) : text_(text), vocab_(vocab) {}

  QueryPtr parse() {
    QueryPtr q = query();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return q;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("query syntax error at offset " + std::to_string(pos_) + ": " + msg, 1, pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size()) fail(std::string("expected '") + c + "', found end of input");
    if (text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  static bool delimiter(char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '"';
  }

  std::string bare_token() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !delimiter(text_[pos_])) ++pos_;
    if (pos_ == start) fail("expected a token");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string quoted() {
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') {
        ++pos_;
        if (pos_ >= text_.size()) break;
      }
      out.push_back(text_[pos_++]);
    }
    if (pos_ >= text_.size()) fail("unterminated string");
    ++pos_;  // closing quote
    return out;
  }

  // Reads `<prefix>NAME` and returns NAME.
  std::string prefixed_name(std::string_view prefix) {
    skip_ws();
    const std::size_t start = pos_;
    if (text_.substr(pos_, prefix.size()) != prefix) {
      fail("expected '" + std::string(prefix) + "' name");
    }
    pos_ += prefix.size();
    if (pos_ < text_.size() && text_[pos_] == '"') return quoted();
    if (pos_ >= text_.size() || delimiter(text_[pos_])) {
      pos_ = start;
      fail("empty name");
    }
    return bare_token();
  }

  std::vector<RelationId> relation_set() {
    expect('(');
    const std::size_t at = pos_;
    if (bare_token() != "rel") {
      pos_ = at;
      fail("expected (rel ...)");
    }
    std::vector<RelationId> rels;
    while (!peek(')')) {
      if (pos_ >= text_.size()) fail("unbalanced parenthesis");
      rels.push_back(vocab_.relation_id(prefixed_name("r:")));
    }
    expect(')');
    if (rels.empty()) fail("relation set is empty");
    return rels;
  }

  std::vector<QueryPtr> operands() {
    std::vector<QueryPtr> xs;
    while (!peek(')')) {
      if (pos_ >= text_.size()) fail("unbalanced parenthesis");
      xs.push_back(query());
    }
    return xs;
  }

  QueryPtr query() {
    expect('(');
    const std::size_t op_pos = pos_;
    const std::string op = bare_token();
    QueryPtr result;
    if (op == "basic") {
      std::vector<EntityId> ids;
      while (!peek(')')) {
        if (pos_ >= text_.size()) fail("unbalanced parenthesis");
        ids.push_back(vocab_.entity_id(prefixed_name("e:")));
      }
      if (ids.empty()) fail("basic set is empty");
      result = make_basic(std::move(ids));
    } else if (op == "follow") {
      QueryPtr input = query();
      result = make_follow(std::move(input), relation_set());
    } else if (op == "filter") {
      QueryPtr input = query();
      auto rels = relation_set();
      result = make_filter(std::move(input), std::move(rels), query());
    } else if (op == "intersect" || op == "union") {
      auto xs = operands();
      if (xs.size() < 2) fail(op + " needs at least two operands");
      result = op == "intersect" ? make_intersect(std::move(xs)) : make_union(std::move(xs));
    } else if (op == "difference") {
      QueryPtr left = query();
      result = make_difference(std::move(left), query());
    } else {
      pos_ = op_pos;
      fail("unknown operator '" + op + "'");
    }
    expect(')');
    return result;
  }

  std::string_view text_;
  const Vocab& vocab_;
  std::size_t pos_ = 0;
};

}  // namespace

QueryPtr make_basic(std::vector<EntityId> entities) { return wrap(BasicSet{std::move(entities)}); }

QueryPtr make_follow(QueryPtr input, std::vector<RelationId> relations) {
  return wrap(FollowNode{std::move(input), RelationSet{std::move(relations)}});
}

QueryPtr make_filter(QueryPtr input, std::vector<RelationId> relations, QueryPtr objects) {
  return wrap(FilterNode{std::move(input), RelationSet{std::move(relations)}, std::move(objects)});
}

QueryPtr make_intersect(std::vector<QueryPtr> operands) {
  return wrap(IntersectNode{std::move(operands)});
}

QueryPtr make_union(std::vector<QueryPtr> operands) { return wrap(UnionNode{std::move(operands)}); }

QueryPtr make_difference(QueryPtr left, QueryPtr right) {
  return wrap(DifferenceNode{std::move(left), std::move(right)});
}

void validate(const Query& query) {
  std::visit(overloaded{
                 [](const BasicSet& b) {
                   if (b.entities.empty()) throw TypeError("basic set has no entities");
                 },
                 [](const FollowNode& f) {
                   require_child(f.input, "follow");
                   if (f.relations.relations.empty()) throw TypeError("follow: no relations");
                 },
                 [](const FilterNode& f) {
                   require_child(f.input, "filter");
                   require_child(f.objects, "filter");
                   if (f.relations.relations.empty()) throw TypeError("filter: no relations");
                 },
                 [](const IntersectNode& n) {
                   if (n.operands.size() < 2) throw TypeError("intersect needs two operands");
                   for (const auto& x : n.operands) require_child(x, "intersect");
                 },
                 [](const UnionNode& n) {
                   if (n.operands.size() < 2) throw TypeError("union needs two operands");
                   for (const auto& x : n.operands) require_child(x, "union");
                 },
                 [](const DifferenceNode& d) {
                   require_child(d.left, "difference");
                   require_child(d.right, "difference");
                 },
             },
             query.node);
}

std::size_t query_depth(const Query& query) {
  return std::visit(
      overloaded{
          [](const BasicSet&) -> std::size_t { return 0; },
          [](const FollowNode& f) -> std::size_t { return 1 + query_depth(*f.input); },
          [](const FilterNode& f) -> std::size_t {
            return 1 + std::max(query_depth(*f.input), query_depth(*f.objects));
          },
          [](const IntersectNode& n) -> std::size_t {
            std::size_t d = 0;
            for (const auto& x : n.operands) d = std::max(d, query_depth(*x));
            return 1 + d;
          },
          [](const UnionNode& n) -> std::size_t {
            std::size_t d = 0;
            for (const auto& x : n.operands) d = std::max(d, query_depth(*x));
            return 1 + d;
          },
          [](const DifferenceNode& n) -> std::size_t {
            return 1 + std::max(query_depth(*n.left), query_depth(*n.right));
          },
      },
      query.node);
}

std::size_t query_size(const Query& query) {
  return std::visit(
      overloaded{
          [](const BasicSet&) -> std::size_t { return 1; },
          [](const FollowNode& f) -> std::size_t { return 1 + query_size(*f.input); },
          [](const FilterNode& f) -> std::size_t {
            return 1 + query_size(*f.input) + query_size(*f.objects);
          },
          [](const IntersectNode& n) -> std::size_t {
            std::size_t s = 1;
            for (const auto& x : n.operands) s += query_size(*x);
            return s;
          },
          [](const UnionNode& n) -> std::size_t {
            std::size_t s = 1;
            for (const auto& x : n.operands) s += query_size(*x);
            return s;
          },
          [](const DifferenceNode& n) -> std::size_t {
            return 1 + query_size(*n.left) + query_size(*n.right);
          },
      },
      query.node);
}

std::string print_query(const Query& query, const Vocab& vocab) {
  std::ostringstream out;
  print(out, query, vocab);
  return out.str();
}

QueryPtr parse_query(std::string_view text, const Vocab& vocab) {
  return Parser(text, vocab).parse();
}

}  // namespace emql
