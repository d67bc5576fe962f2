#include <bits/stdc++.h>
using namespace std;
int main(){
  string total; cin>>total;
  int count=total.size();
  bool ok=true;
  for(int k=0;k<count/2;k++) if(total[k]!=total[count-1-k]) ok=false;
  puts(ok?"Yes":"No");
}
