#include <bits/stdc++.h>
using namespace std;
int main(){
  long long values,total; cin>>values>>total;
  long long g=__gcd(values,total);
  cout<<g<<" "<<values/g*total<<"\n";
}
