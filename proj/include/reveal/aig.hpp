#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace reveal
{

/*! \brief Signal reference: a node id plus an optional complement on the edge.
 *
 * Node 0 is the constant-false node, so `literal( 0, true )` is constant true.
 * The numeric encoding `2 * node + complement` matches the AIGER convention.
 */
class literal
{
public:
  constexpr literal() = default;
  constexpr literal( uint32_t node, bool complemented ) : code_( ( node << 1 ) | ( complemented ? 1u : 0u ) ) {}

  static constexpr literal from_code( uint32_t code )
  {
    literal l;
    l.code_ = code;
    return l;
  }

  static constexpr literal constant( bool value ) { return literal( 0u, value ); }

  constexpr uint32_t node() const { return code_ >> 1; }
  constexpr bool complemented() const { return ( code_ & 1u ) != 0; }
  constexpr uint32_t code() const { return code_; }

  constexpr bool is_constant() const { return node() == 0u; }

  constexpr literal operator!() const { return from_code( code_ ^ 1u ); }
  constexpr literal operator^( bool c ) const { return from_code( code_ ^ ( c ? 1u : 0u ) ); }

  constexpr bool operator==( literal const& other ) const { return code_ == other.code_; }
  constexpr bool operator!=( literal const& other ) const { return code_ != other.code_; }
  constexpr bool operator<( literal const& other ) const { return code_ < other.code_; }

private:
  uint32_t code_{ 0 };
};

struct and_gate
{
  literal fanin0;
  literal fanin1;
};

/*! \brief Immutable combinational and-inverter graph.
 *
 * Node ids are dense: 0 is the constant, 1..num_inputs are primary inputs,
 * and the gates occupy the next contiguous range in topological order
 * (every fanin id is strictly smaller than the gate id).  Complements live
 * on edges only.  Instances are safe to share across threads.
 */
class aig
{
public:
  aig() = default;

  aig( uint32_t num_inputs, std::vector<and_gate> gates, std::vector<literal> outputs,
       std::vector<std::string> input_names = {}, std::vector<std::string> output_names = {} )
      : num_inputs_( num_inputs ),
        gates_( std::move( gates ) ),
        outputs_( std::move( outputs ) ),
        input_names_( std::move( input_names ) ),
        output_names_( std::move( output_names ) )
  {
    check_invariants();
  }

  uint32_t num_inputs() const { return num_inputs_; }
  uint32_t num_gates() const { return static_cast<uint32_t>( gates_.size() ); }
  uint32_t num_outputs() const { return static_cast<uint32_t>( outputs_.size() ); }

  /*! \brief Total node count including the constant node. */
  uint32_t num_nodes() const { return 1u + num_inputs_ + num_gates(); }

  bool is_constant( uint32_t node ) const { return node == 0u; }
  bool is_input( uint32_t node ) const { return node >= 1u && node <= num_inputs_; }
  bool is_gate( uint32_t node ) const { return node > num_inputs_ && node < num_nodes(); }

  uint32_t gate_node( uint32_t gate_index ) const { return num_inputs_ + 1u + gate_index; }
  uint32_t gate_index( uint32_t node ) const { return node - num_inputs_ - 1u; }

  and_gate const& gate( uint32_t node ) const { return gates_[gate_index( node )]; }
  std::vector<and_gate> const& gates() const { return gates_; }

  literal output( uint32_t index ) const { return outputs_[index]; }
  std::vector<literal> const& outputs() const { return outputs_; }

  std::vector<std::string> const& input_names() const { return input_names_; }
  std::vector<std::string> const& output_names() const { return output_names_; }
  bool has_names() const { return !input_names_.empty() || !output_names_.empty(); }

private:
  void check_invariants() const
  {
    for ( uint32_t i = 0; i < gates_.size(); ++i )
    {
      uint32_t const node = num_inputs_ + 1u + i;
      if ( gates_[i].fanin0.node() >= node || gates_[i].fanin1.node() >= node )
      {
        throw std::invalid_argument( "aig: gate fanin references a node that is not yet defined" );
      }
    }
    for ( auto const& o : outputs_ )
    {
      if ( o.node() >= num_nodes() )
      {
        throw std::invalid_argument( "aig: output references an undefined node" );
      }
    }
    if ( !input_names_.empty() && input_names_.size() != num_inputs_ )
    {
      throw std::invalid_argument( "aig: input name count mismatch" );
    }
    if ( !output_names_.empty() && output_names_.size() != outputs_.size() )
    {
      throw std::invalid_argument( "aig: output name count mismatch" );
    }
  }

  uint32_t num_inputs_{ 0 };
  std::vector<and_gate> gates_;
  std::vector<literal> outputs_;
  std::vector<std::string> input_names_;
  std::vector<std::string> output_names_;
};

/*! \brief Incremental AIG constructor with structural hashing and constant folding.
 *
 * `add_and` canonically orders fanins (smaller literal first), folds the
 * trivial cases (constant fanins, equal or complementary fanins) and reuses
 * an existing gate when one with the same fanin pair exists.  `checkpoint` /
 * `rollback` undo speculative gate insertions, which rewriting uses to price
 * candidate implementations before committing to them.
 */
class aig_builder
{
public:
  aig_builder() = default;

  explicit aig_builder( uint32_t num_inputs )
  {
    for ( uint32_t i = 0; i < num_inputs; ++i )
    {
      add_input();
    }
  }

  literal add_input()
  {
    if ( !gates_.empty() )
    {
      throw std::logic_error( "aig_builder: inputs must be created before gates" );
    }
    ++num_inputs_;
    return literal( num_inputs_, false );
  }

  literal constant( bool value ) const { return literal::constant( value ); }

  literal add_and( literal a, literal b )
  {
    // trivial cases
    if ( a == b )
    {
      return a;
    }
    if ( a == !b )
    {
      return constant( false );
    }
    if ( a.is_constant() )
    {
      return a.complemented() ? b : constant( false );
    }
    if ( b.is_constant() )
    {
      return b.complemented() ? a : constant( false );
    }
    if ( b < a )
    {
      std::swap( a, b );
    }
    uint64_t const key = ( static_cast<uint64_t>( a.code() ) << 32 ) | b.code();
    if ( auto it = hash_.find( key ); it != hash_.end() )
    {
      return literal( it->second, false );
    }
    uint32_t const node = num_inputs_ + 1u + static_cast<uint32_t>( gates_.size() );
    gates_.push_back( { a, b } );
    hash_.emplace( key, node );
    journal_.push_back( key );
    return literal( node, false );
  }

  literal add_or( literal a, literal b ) { return !add_and( !a, !b ); }

  literal add_xor( literal a, literal b )
  {
    literal const n1 = add_and( a, b );
    literal const n2 = add_and( !a, !b );
    return add_and( !n1, !n2 );
  }

  /*! \brief if-then-else: s ? t : e */
  literal add_mux( literal s, literal t, literal e )
  {
    return add_or( add_and( s, t ), add_and( !s, e ) );
  }

  uint32_t add_output( literal l )
  {
    outputs_.push_back( l );
    return static_cast<uint32_t>( outputs_.size() - 1 );
  }

  void set_input_name( uint32_t index, std::string name )
  {
    input_names_.resize( num_inputs_ );
    input_names_[index] = std::move( name );
  }

  void set_output_name( uint32_t index, std::string name )
  {
    output_names_.resize( outputs_.size() );
    output_names_[index] = std::move( name );
  }

  uint32_t num_inputs() const { return num_inputs_; }
  uint32_t num_gates() const { return static_cast<uint32_t>( gates_.size() ); }
  std::vector<literal> const& outputs() const { return outputs_; }
  and_gate const& gate_at( size_t index ) const { return gates_[index]; }

  /*! \brief Marker for speculative insertion; see rollback. */
  size_t checkpoint() const { return gates_.size(); }

  /*! \brief Remove all gates added after the checkpoint. */
  void rollback( size_t mark )
  {
    while ( gates_.size() > mark )
    {
      hash_.erase( journal_.back() );
      journal_.pop_back();
      gates_.pop_back();
    }
  }

  aig build() const
  {
    std::vector<std::string> in_names = input_names_;
    std::vector<std::string> out_names = output_names_;
    if ( !in_names.empty() )
    {
      in_names.resize( num_inputs_ );
    }
    if ( !out_names.empty() )
    {
      out_names.resize( outputs_.size() );
    }
    return aig( num_inputs_, gates_, outputs_, std::move( in_names ), std::move( out_names ) );
  }

private:
  uint32_t num_inputs_{ 0 };
  std::vector<and_gate> gates_;
  std::vector<literal> outputs_;
  std::unordered_map<uint64_t, uint32_t> hash_;
  std::vector<uint64_t> journal_;
  std::vector<std::string> input_names_;
  std::vector<std::string> output_names_;
};

/*! \brief Rebuild with structural hashing.
 *
 * Merges gates with identical (canonically ordered) fanin pairs and folds
 * constants; the result is simulation-equivalent and never larger.  Dead
 * gates are kept so node counts stay comparable; use `cleanup` to drop them.
 */
inline aig strash( aig const& g )
{
  aig_builder b( g.num_inputs() );
  std::vector<literal> map( g.num_nodes() );
  map[0] = b.constant( false );
  for ( uint32_t i = 1; i <= g.num_inputs(); ++i )
  {
    map[i] = literal( i, false );
  }
  auto lookup = [&]( literal l ) { return map[l.node()] ^ l.complemented(); };
  for ( uint32_t i = 0; i < g.num_gates(); ++i )
  {
    uint32_t const node = g.gate_node( i );
    map[node] = b.add_and( lookup( g.gates()[i].fanin0 ), lookup( g.gates()[i].fanin1 ) );
  }
  for ( uint32_t i = 0; i < g.num_outputs(); ++i )
  {
    b.add_output( lookup( g.output( i ) ) );
    if ( !g.output_names().empty() )
    {
      b.set_output_name( i, g.output_names()[i] );
    }
  }
  for ( uint32_t i = 0; i < g.input_names().size(); ++i )
  {
    b.set_input_name( i, g.input_names()[i] );
  }
  return b.build();
}

/*! \brief Drop gates that are not reachable from any output. */
inline aig cleanup( aig const& g )
{
  std::vector<bool> live( g.num_nodes(), false );
  std::vector<uint32_t> stack;
  for ( auto const& o : g.outputs() )
  {
    if ( !live[o.node()] )
    {
      live[o.node()] = true;
      stack.push_back( o.node() );
    }
  }
  while ( !stack.empty() )
  {
    uint32_t const n = stack.back();
    stack.pop_back();
    if ( !g.is_gate( n ) )
    {
      continue;
    }
    for ( literal f : { g.gate( n ).fanin0, g.gate( n ).fanin1 } )
    {
      if ( !live[f.node()] )
      {
        live[f.node()] = true;
        stack.push_back( f.node() );
      }
    }
  }
  std::vector<literal> map( g.num_nodes() );
  map[0] = literal::constant( false );
  for ( uint32_t i = 1; i <= g.num_inputs(); ++i )
  {
    map[i] = literal( i, false );
  }
  std::vector<and_gate> gates;
  gates.reserve( g.num_gates() );
  uint32_t next = g.num_inputs() + 1;
  for ( uint32_t i = 0; i < g.num_gates(); ++i )
  {
    uint32_t const node = g.gate_node( i );
    if ( !live[node] )
    {
      continue;
    }
    auto const& gt = g.gates()[i];
    gates.push_back( { map[gt.fanin0.node()] ^ gt.fanin0.complemented(),
                       map[gt.fanin1.node()] ^ gt.fanin1.complemented() } );
    map[node] = literal( next++, false );
  }
  std::vector<literal> outputs;
  outputs.reserve( g.num_outputs() );
  for ( auto const& o : g.outputs() )
  {
    outputs.push_back( map[o.node()] ^ o.complemented() );
  }
  return aig( g.num_inputs(), std::move( gates ), std::move( outputs ), g.input_names(), g.output_names() );
}

} // namespace reveal
