#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "emql/kbstore.hpp"
#include "emql/types.hpp"

namespace emql {

struct Query;
using QueryPtr = std::shared_ptr<const Query>;

/// Anchor entities, encoded with weight 1 each.
struct BasicSet {
  std::vector<EntityId> entities;
};

struct RelationSet {
  std::vector<RelationId> relations;
};

struct FollowNode {
  QueryPtr input;
  RelationSet relations;
};

struct FilterNode {
  QueryPtr input;
  RelationSet relations;
  QueryPtr objects;
};

struct IntersectNode {
  std::vector<QueryPtr> operands;
};

struct UnionNode {
  std::vector<QueryPtr> operands;
};

struct DifferenceNode {
  QueryPtr left;
  QueryPtr right;
};

/// Immutable query tree over entity sets. Children are shared, so a tree may
/// reuse subexpressions.
struct Query {
  using Node =
      std::variant<BasicSet, FollowNode, FilterNode, IntersectNode, UnionNode, DifferenceNode>;
  Node node;
};

QueryPtr make_basic(std::vector<EntityId> entities);
QueryPtr make_follow(QueryPtr input, std::vector<RelationId> relations);
QueryPtr make_filter(QueryPtr input, std::vector<RelationId> relations, QueryPtr objects);
QueryPtr make_intersect(std::vector<QueryPtr> operands);
QueryPtr make_union(std::vector<QueryPtr> operands);
QueryPtr make_difference(QueryPtr left, QueryPtr right);

/// Throws TypeError for null children, empty anchor or relation sets, and
/// n-ary nodes with fewer than two operands.
void validate(const Query& query);

/// Longest root-to-leaf path counting operator nodes (a basic set has depth 0).
std::size_t query_depth(const Query& query);
/// Total node count.
std::size_t query_size(const Query& query);

/// Canonical s-expression, e.g. (follow (basic e:Apple_Inc) (rel r:headquarters_of)).
std::string print_query(const Query& query, const Vocab& vocab);

/// Parses the s-expression grammar:
///
///   query  := (basic ENTITY+) | (follow query rels) | (filter query rels query)
///           | (intersect query query+) | (union query query+)
///           | (difference query query)
///   rels   := (rel RELATION+)
///   ENTITY := e:NAME    RELATION := r:NAME
///
/// NAME is a bare token or a double-quoted string with \" and \\ escapes.
/// Throws ParseError (with the byte offset) on syntax errors and
/// UnknownNameError on names missing from the vocabulary.
QueryPtr parse_query(std::string_view text, const Vocab& vocab);

}  // namespace emql
