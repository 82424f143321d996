#include <cstdio>

int main()
{
  std::puts( "reveal: subcommands not wired up yet" );
  return 0;
}
