#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "blocks.hpp"
#include "cones.hpp"
#include "simulate.hpp"

namespace reveal
{

inline constexpr uint32_t node_feature_dim = 11;

/*! \brief Per-node one-hot features, one 11-wide row per cone node.
 *
 * Layout: [edge1 inverted, edge2 inverted, is PI, is PO, is inner,
 *          HA, FA, remaining XOR, AND, MAJ root, XOR root].
 * Output-driving nodes count as PO; inputs and the constant default to the
 * AND function tag so the one-hot groups stay exact.
 */
inline std::vector<double> node_features( cone const& c, block_annotation const& ann )
{
  aig const& g = c.sub;
  if ( ann.num_nodes() != g.num_nodes() )
  {
    throw std::invalid_argument( "node_features: annotation does not match the cone" );
  }
  std::vector<bool> is_po( g.num_nodes(), false );
  for ( auto const& o : g.outputs() )
  {
    is_po[o.node()] = true;
  }
  std::vector<double> rows( static_cast<size_t>( g.num_nodes() ) * node_feature_dim, 0.0 );
  for ( uint32_t n = 0; n < g.num_nodes(); ++n )
  {
    double* row = rows.data() + static_cast<size_t>( n ) * node_feature_dim;
    if ( g.is_gate( n ) )
    {
      row[0] = g.gate( n ).fanin0.complemented() ? 1.0 : 0.0;
      row[1] = g.gate( n ).fanin1.complemented() ? 1.0 : 0.0;
    }
    if ( is_po[n] )
    {
      row[3] = 1.0;
    }
    else if ( g.is_input( n ) )
    {
      row[2] = 1.0;
    }
    else
    {
      row[4] = 1.0;
    }
    switch ( ann.function_tag[n] )
    {
    case node_function::ha_member: row[5] = 1.0; break;
    case node_function::fa_member: row[6] = 1.0; break;
    case node_function::remaining_xor: row[7] = 1.0; break;
    case node_function::and_gate: row[8] = 1.0; break;
    }
    row[9] = ann.maj_root[n] ? 1.0 : 0.0;
    row[10] = ann.xor_root[n] ? 1.0 : 0.0;
  }
  return rows;
}

/*! \brief Graph-level statistics over the cone plus the two scalars the
 * classifier heads consume: the full circuit's maximum logic depth and the
 * cone's boundary-input count.
 */
struct graph_features
{
  uint32_t input_count{ 0 };
  uint32_t gate_count{ 0 };
  double density{ 0.0 };
  double clustering{ 0.0 };
  double avg_degree{ 0.0 };
  double f_level{ 0.0 };
  double f_fan{ 0.0 };
};

/*! \brief Density, mean local clustering and average degree of an undirected
 * simple graph (parallel edges collapse, self-loops are ignored).
 */
struct undirected_stats
{
  double density{ 0.0 };
  double clustering{ 0.0 };
  double avg_degree{ 0.0 };
};

inline undirected_stats graph_stats( uint32_t num_vertices,
                                     std::vector<std::pair<uint32_t, uint32_t>> const& edge_list )
{
  if ( num_vertices == 0 )
  {
    throw std::invalid_argument( "graph_stats: empty graph" );
  }
  std::vector<std::vector<uint32_t>> adj( num_vertices );
  std::set<std::pair<uint32_t, uint32_t>> edges;
  for ( auto const& [a, b] : edge_list )
  {
    if ( a == b )
    {
      continue;
    }
    auto const key = std::minmax( a, b );
    if ( edges.insert( { key.first, key.second } ).second )
    {
      adj[a].push_back( b );
      adj[b].push_back( a );
    }
  }
  undirected_stats out;
  double const v = static_cast<double>( num_vertices );
  double const e = static_cast<double>( edges.size() );
  out.density = num_vertices > 1 ? 2.0 * e / ( v * ( v - 1 ) ) : 0.0;
  out.avg_degree = 2.0 * e / v;
  double clustering_total = 0.0;
  for ( uint32_t n = 0; n < num_vertices; ++n )
  {
    auto const& nb = adj[n];
    if ( nb.size() < 2 )
    {
      continue;
    }
    uint32_t links = 0;
    for ( size_t i = 0; i < nb.size(); ++i )
    {
      for ( size_t j = i + 1; j < nb.size(); ++j )
      {
        auto const key = std::minmax( nb[i], nb[j] );
        links += edges.count( { key.first, key.second } ) ? 1 : 0;
      }
    }
    clustering_total += 2.0 * links / ( static_cast<double>( nb.size() ) * ( nb.size() - 1 ) );
  }
  out.clustering = clustering_total / v;
  return out;
}

namespace detail
{

/*! \brief Undirected view of a cone: inputs and gates, constant excluded. */
inline undirected_stats cone_stats( aig const& g )
{
  uint32_t const v = g.num_inputs() + g.num_gates();
  if ( v == 0 )
  {
    throw std::invalid_argument( "graph_features: empty cone" );
  }
  std::vector<std::pair<uint32_t, uint32_t>> edge_list;
  for ( uint32_t i = 0; i < g.num_gates(); ++i )
  {
    uint32_t const node = g.gate_node( i );
    for ( literal f : { g.gates()[i].fanin0, g.gates()[i].fanin1 } )
    {
      if ( f.node() != 0 )
      {
        edge_list.push_back( { node - 1, f.node() - 1 } ); // shift the constant away
      }
    }
  }
  return graph_stats( v, edge_list );
}

} // namespace detail

inline graph_features compute_graph_features( cone const& c, aig const& full )
{
  graph_features out;
  out.input_count = c.sub.num_inputs();
  out.gate_count = c.sub.num_gates();
  auto const stats = detail::cone_stats( c.sub );
  out.density = stats.density;
  out.clustering = stats.clustering;
  out.avg_degree = stats.avg_degree;
  auto const levels = logic_levels( full );
  uint32_t max_level = 0;
  for ( auto const& o : full.outputs() )
  {
    max_level = std::max( max_level, levels[o.node()] );
  }
  out.f_level = static_cast<double>( max_level );
  out.f_fan = static_cast<double>( c.boundary_inputs.size() );
  return out;
}

/*! \brief Everything the classifier consumes for one cone. */
struct gnn_sample
{
  uint32_t num_nodes{ 0 };
  std::vector<double> features; // num_nodes x node_feature_dim, row-major
  std::vector<std::pair<uint32_t, uint32_t>> edges; // fanin -> gate
  graph_features graph;
  int topo_label{ -1 };    // 0 = non-tree, 1 = tree
  int subtype_label{ -1 }; // class index inside the topo category, or PPA class
};

inline gnn_sample make_sample( cone const& c, block_annotation const& ann, aig const& full )
{
  gnn_sample s;
  s.num_nodes = c.sub.num_nodes();
  s.features = node_features( c, ann );
  for ( uint32_t i = 0; i < c.sub.num_gates(); ++i )
  {
    uint32_t const node = c.sub.gate_node( i );
    s.edges.push_back( { c.sub.gates()[i].fanin0.node(), node } );
    s.edges.push_back( { c.sub.gates()[i].fanin1.node(), node } );
  }
  s.graph = compute_graph_features( c, full );
  return s;
}

} // namespace reveal
