#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aig.hpp"

namespace reveal
{

/*! \brief Conjunctive normal form with DIMACS-style signed literals.
 * Variable i+1 corresponds to node i of the encoded circuit.
 */
struct cnf
{
  int num_vars{ 0 };
  std::vector<std::vector<int>> clauses;

  int var_of_node( uint32_t node ) const { return static_cast<int>( node ) + 1; }
};

/*! \brief Tseitin encoding of a single-output circuit with the output
 * asserted true: three clauses per and-gate plus the root unit clause (and a
 * unit fixing the constant node when it is referenced).
 */
inline cnf tseitin( aig const& g, uint32_t output_index = 0 )
{
  if ( output_index >= g.num_outputs() )
  {
    throw std::invalid_argument( "tseitin: no such output" );
  }
  cnf f;
  f.num_vars = static_cast<int>( g.num_nodes() );
  auto lit = []( literal l ) {
    int const v = static_cast<int>( l.node() ) + 1;
    return l.complemented() ? -v : v;
  };
  bool const_referenced = g.output( output_index ).node() == 0;
  for ( uint32_t i = 0; i < g.num_gates(); ++i )
  {
    auto const& gt = g.gates()[i];
    int const o = static_cast<int>( g.gate_node( i ) ) + 1;
    int const a = lit( gt.fanin0 );
    int const b = lit( gt.fanin1 );
    const_referenced = const_referenced || gt.fanin0.is_constant() || gt.fanin1.is_constant();
    f.clauses.push_back( { -o, a } );
    f.clauses.push_back( { -o, b } );
    f.clauses.push_back( { o, -a, -b } );
  }
  if ( const_referenced )
  {
    f.clauses.push_back( { -1 } ); // the constant node is false
  }
  f.clauses.push_back( { lit( g.output( output_index ) ) } );
  return f;
}

/*! \brief Bit-exact DIMACS text: header, one zero-terminated clause per line. */
inline std::string to_dimacs( cnf const& f )
{
  std::ostringstream os;
  os << "p cnf " << f.num_vars << ' ' << f.clauses.size() << '\n';
  for ( auto const& clause : f.clauses )
  {
    for ( int l : clause )
    {
      os << l << ' ';
    }
    os << "0\n";
  }
  return os.str();
}

inline cnf parse_dimacs( std::string const& text )
{
  std::istringstream is( text );
  std::string token;
  cnf f;
  int expected_clauses = -1;
  while ( is >> token )
  {
    if ( token == "c" )
    {
      std::string rest;
      std::getline( is, rest );
      continue;
    }
    if ( token == "p" )
    {
      std::string fmt;
      if ( !( is >> fmt >> f.num_vars >> expected_clauses ) || fmt != "cnf" )
      {
        throw std::invalid_argument( "dimacs: malformed problem line" );
      }
      continue;
    }
    // literal
    std::vector<int> clause;
    int l = std::stoi( token );
    while ( l != 0 )
    {
      clause.push_back( l );
      if ( !( is >> l ) )
      {
        throw std::invalid_argument( "dimacs: clause not zero-terminated" );
      }
    }
    f.clauses.push_back( std::move( clause ) );
  }
  if ( expected_clauses < 0 )
  {
    throw std::invalid_argument( "dimacs: missing problem line" );
  }
  return f;
}

} // namespace reveal
