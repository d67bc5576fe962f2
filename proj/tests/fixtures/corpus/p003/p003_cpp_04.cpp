#include <bits/stdc++.h>
using namespace std;
int main(){
  string res; cin>>res;
  int m=res.size();
  bool ok=true;
  for(int t=0;t<m/2;t++) if(res[t]!=res[m-1-t]) ok=false;
  puts(ok?"Yes":"No");
}
