#include <bits/stdc++.h>
using namespace std;
int main(){
  long long xs,res; cin>>xs>>res;
  long long g=__gcd(xs,res);
  cout<<g<<" "<<xs/g*res<<"\n";
}
