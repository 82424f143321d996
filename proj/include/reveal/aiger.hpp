#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aig.hpp"

namespace reveal
{

struct aiger_error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

enum class aiger_format
{
  ascii,
  binary
};

namespace detail
{

struct token_reader
{
  std::string_view data;
  size_t pos{ 0 };

  bool eof() const { return pos >= data.size(); }

  void skip_space()
  {
    while ( pos < data.size() && ( data[pos] == ' ' || data[pos] == '\t' || data[pos] == '\n' || data[pos] == '\r' ) )
    {
      ++pos;
    }
  }

  uint64_t number( char const* what )
  {
    skip_space();
    if ( eof() || data[pos] < '0' || data[pos] > '9' )
    {
      throw aiger_error( std::string( "aiger: expected number for " ) + what );
    }
    uint64_t v = 0;
    while ( pos < data.size() && data[pos] >= '0' && data[pos] <= '9' )
    {
      v = v * 10 + static_cast<uint64_t>( data[pos] - '0' );
      ++pos;
    }
    return v;
  }

  std::string line()
  {
    size_t const end = data.find( '\n', pos );
    std::string result;
    if ( end == std::string_view::npos )
    {
      result = std::string( data.substr( pos ) );
      pos = data.size();
    }
    else
    {
      result = std::string( data.substr( pos, end - pos ) );
      pos = end + 1;
    }
    return result;
  }
};

inline uint32_t decode_delta( std::string_view data, size_t& pos )
{
  uint32_t value = 0;
  int shift = 0;
  while ( true )
  {
    if ( pos >= data.size() )
    {
      throw aiger_error( "aiger: truncated binary gate section" );
    }
    uint8_t const byte = static_cast<uint8_t>( data[pos++] );
    value |= static_cast<uint32_t>( byte & 0x7f ) << shift;
    if ( ( byte & 0x80 ) == 0 )
    {
      return value;
    }
    shift += 7;
  }
}

inline void encode_delta( std::string& out, uint32_t value )
{
  while ( value >= 0x80 )
  {
    out.push_back( static_cast<char>( ( value & 0x7f ) | 0x80 ) );
    value >>= 7;
  }
  out.push_back( static_cast<char>( value ) );
}

} // namespace detail

/*! \brief Parse a combinational AIGER 1.9 file (ascii "aag" or binary "aig").
 *
 * Sequential files are rejected ("sequential circuit").  Inputs must use the
 * canonical dense numbering and every fanin must be defined before use;
 * anything else reports a dangling literal.  Symbol-table lines are kept.
 */
inline aig parse_aiger( std::string_view data )
{
  detail::token_reader r{ data };
  r.skip_space();
  bool binary = false;
  if ( data.substr( r.pos, 3 ) == "aig" )
  {
    binary = true;
  }
  else if ( data.substr( r.pos, 3 ) != "aag" )
  {
    throw aiger_error( "aiger: malformed header (expected 'aag' or 'aig')" );
  }
  r.pos += 3;

  uint64_t const m = r.number( "M" );
  uint64_t const i = r.number( "I" );
  uint64_t const l = r.number( "L" );
  uint64_t const o = r.number( "O" );
  uint64_t const a = r.number( "A" );
  if ( l != 0 )
  {
    throw aiger_error( "aiger: sequential circuit (latches are not supported)" );
  }
  if ( m != i + a )
  {
    throw aiger_error( "aiger: malformed header (M != I + A)" );
  }
  // move to end of header line
  while ( r.pos < data.size() && data[r.pos] != '\n' )
  {
    ++r.pos;
  }
  if ( r.pos < data.size() )
  {
    ++r.pos;
  }

  auto const max_lit = 2 * ( m + 1 );
  std::vector<literal> outputs;
  std::vector<and_gate> gates;
  gates.reserve( a );

  if ( !binary )
  {
    for ( uint64_t k = 0; k < i; ++k )
    {
      uint64_t const lit = r.number( "input literal" );
      if ( lit != 2 * ( k + 1 ) )
      {
        throw aiger_error( "aiger: non-canonical input numbering" );
      }
    }
    for ( uint64_t k = 0; k < o; ++k )
    {
      uint64_t const lit = r.number( "output literal" );
      if ( lit >= max_lit )
      {
        throw aiger_error( "aiger: dangling output literal" );
      }
      outputs.push_back( literal::from_code( static_cast<uint32_t>( lit ) ) );
    }
    for ( uint64_t k = 0; k < a; ++k )
    {
      uint64_t const lhs = r.number( "gate lhs" );
      uint64_t const rhs0 = r.number( "gate rhs0" );
      uint64_t const rhs1 = r.number( "gate rhs1" );
      uint64_t const node = i + 1 + k;
      if ( lhs != 2 * node )
      {
        throw aiger_error( "aiger: non-canonical gate numbering" );
      }
      if ( rhs0 >= lhs || rhs1 >= lhs )
      {
        throw aiger_error( "aiger: dangling literal in gate definition" );
      }
      gates.push_back( { literal::from_code( static_cast<uint32_t>( rhs0 ) ),
                         literal::from_code( static_cast<uint32_t>( rhs1 ) ) } );
    }
  }
  else
  {
    for ( uint64_t k = 0; k < o; ++k )
    {
      uint64_t const lit = r.number( "output literal" );
      if ( lit >= max_lit )
      {
        throw aiger_error( "aiger: dangling output literal" );
      }
      outputs.push_back( literal::from_code( static_cast<uint32_t>( lit ) ) );
    }
    // skip exactly one newline after the last output
    while ( r.pos < data.size() && data[r.pos] != '\n' )
    {
      ++r.pos;
    }
    if ( r.pos < data.size() )
    {
      ++r.pos;
    }
    for ( uint64_t k = 0; k < a; ++k )
    {
      uint64_t const lhs = 2 * ( i + 1 + k );
      uint32_t const delta0 = detail::decode_delta( data, r.pos );
      if ( delta0 == 0 || delta0 > lhs )
      {
        throw aiger_error( "aiger: dangling literal in binary gate definition" );
      }
      uint64_t const rhs0 = lhs - delta0;
      uint32_t const delta1 = detail::decode_delta( data, r.pos );
      if ( delta1 > rhs0 )
      {
        throw aiger_error( "aiger: dangling literal in binary gate definition" );
      }
      uint64_t const rhs1 = rhs0 - delta1;
      gates.push_back( { literal::from_code( static_cast<uint32_t>( rhs0 ) ),
                         literal::from_code( static_cast<uint32_t>( rhs1 ) ) } );
    }
  }

  // symbol table and comments
  std::vector<std::string> input_names, output_names;
  while ( true )
  {
    r.skip_space();
    if ( r.eof() )
    {
      break;
    }
    char const c = data[r.pos];
    if ( c == 'i' || c == 'o' )
    {
      ++r.pos;
      detail::token_reader num{ data, r.pos };
      uint64_t idx;
      try
      {
        idx = num.number( "symbol index" );
      }
      catch ( aiger_error const& )
      {
        break; // not a symbol line after all
      }
      r.pos = num.pos;
      if ( r.pos < data.size() && data[r.pos] == ' ' )
      {
        ++r.pos;
      }
      std::string const name = r.line();
      if ( c == 'i' && idx < i )
      {
        input_names.resize( i );
        input_names[idx] = name;
      }
      else if ( c == 'o' && idx < o )
      {
        output_names.resize( o );
        output_names[idx] = name;
      }
    }
    else if ( c == 'c' )
    {
      break; // comment section, ignored
    }
    else
    {
      throw aiger_error( "aiger: unexpected trailing content" );
    }
  }

  return aig( static_cast<uint32_t>( i ), std::move( gates ), std::move( outputs ),
              std::move( input_names ), std::move( output_names ) );
}

/*! \brief Serialize to AIGER (ascii or binary), bit-exact per the format definition. */
inline std::string write_aiger( aig const& g, aiger_format format = aiger_format::ascii )
{
  std::string out;
  uint64_t const i = g.num_inputs();
  uint64_t const a = g.num_gates();
  uint64_t const m = i + a;
  std::ostringstream header;
  header << ( format == aiger_format::ascii ? "aag " : "aig " ) << m << ' ' << i << " 0 "
         << g.num_outputs() << ' ' << a << '\n';
  out += header.str();

  if ( format == aiger_format::ascii )
  {
    for ( uint64_t k = 0; k < i; ++k )
    {
      out += std::to_string( 2 * ( k + 1 ) );
      out += '\n';
    }
  }
  for ( auto const& o : g.outputs() )
  {
    out += std::to_string( o.code() );
    out += '\n';
  }
  if ( format == aiger_format::ascii )
  {
    for ( uint64_t k = 0; k < a; ++k )
    {
      auto const& gt = g.gates()[k];
      out += std::to_string( 2 * ( i + 1 + k ) );
      out += ' ';
      out += std::to_string( gt.fanin0.code() );
      out += ' ';
      out += std::to_string( gt.fanin1.code() );
      out += '\n';
    }
  }
  else
  {
    for ( uint64_t k = 0; k < a; ++k )
    {
      auto const& gt = g.gates()[k];
      uint32_t rhs0 = gt.fanin0.code();
      uint32_t rhs1 = gt.fanin1.code();
      if ( rhs0 < rhs1 )
      {
        std::swap( rhs0, rhs1 );
      }
      uint32_t const lhs = static_cast<uint32_t>( 2 * ( i + 1 + k ) );
      detail::encode_delta( out, lhs - rhs0 );
      detail::encode_delta( out, rhs0 - rhs1 );
    }
  }
  for ( uint32_t k = 0; k < g.input_names().size(); ++k )
  {
    if ( !g.input_names()[k].empty() )
    {
      out += 'i';
      out += std::to_string( k );
      out += ' ';
      out += g.input_names()[k];
      out += '\n';
    }
  }
  for ( uint32_t k = 0; k < g.output_names().size(); ++k )
  {
    if ( !g.output_names()[k].empty() )
    {
      out += 'o';
      out += std::to_string( k );
      out += ' ';
      out += g.output_names()[k];
      out += '\n';
    }
  }
  return out;
}

} // namespace reveal
